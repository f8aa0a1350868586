//! Imaginary quadratic class groups: ideal route against the reduced-form oracle.

use toruscl::numfield::forms::{form_class_group, fundamental_discriminants};
use toruscl::numfield::{squarefree_part, Field};

#[test]
fn ideal_class_groups_match_forms_up_to_500() {
    let start = std::time::Instant::now();
    for disc in fundamental_discriminants(500) {
        let d = squarefree_part(&disc.into());
        let k = Field::quadratic(i64::try_from(d).unwrap()).unwrap();
        assert_eq!(k.discriminant(), &disc.into());
        let ideals = k.class_group().unwrap().group().clone();
        let forms = form_class_group(disc).unwrap();
        assert!(ideals.is_isomorphic(&forms), "D = {disc}: ideals {ideals}, forms {forms}");
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn named_class_numbers() {
    for (d, h) in [(-1, 1), (-5, 2), (-23, 3)] {
        assert_eq!(Field::quadratic(d).unwrap().class_group().unwrap().order(), h);
    }
}
