use std::path::PathBuf;

use afindex_core::catalog::load_amenities;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/synthetic")
        .join(name)
}

#[test]
fn bundled_amenity_spec_has_nine_definitions() {
    let spec = load_amenities(&fixture("amenities.toml")).unwrap();
    let names: Vec<&str> = spec.amenities().iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names.len(), 9);
    for n in [
        "schedule_flexibility",
        "telecommuting",
        "physical_job_demands",
        "work_pace",
        "work_autonomy",
    ] {
        assert!(names.contains(&n), "{n}");
    }
    assert!(spec
        .amenities()
        .iter()
        .all(|a| !a.definition.trim().is_empty()));
}
