#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(records) = figkit::io::parse_feature_csv(data) else { return };
    let bytes = figkit::io::feature_csv(&records).unwrap();
    assert_eq!(figkit::io::parse_feature_csv(&bytes).unwrap(), records);
});
