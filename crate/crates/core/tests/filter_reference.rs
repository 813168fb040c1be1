//! `docs/wavelet_filters.csv` must match the compiled filter constants.
//! Regenerate with `RIGCAST_BLESS=1 cargo test --test filter_reference`.

use std::path::PathBuf;

use rigcast::dwt::filter_reference;

#[test]
fn checked_in_filter_table_is_current() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/wavelet_filters.csv");
    let generated = filter_reference();
    if std::env::var("RIGCAST_BLESS").is_ok_and(|v| v == "1") {
        std::fs::write(&path, &generated).unwrap();
    }
    let on_disk = std::fs::read_to_string(&path).expect("docs/wavelet_filters.csv exists");
    assert_eq!(on_disk, generated);
}
