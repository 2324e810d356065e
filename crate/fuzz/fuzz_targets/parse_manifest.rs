#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // accepted manifests survive a write/read cycle
    if let Ok(records) = figkit::io::parse_manifest(data) {
        let text = figkit::io::manifest_json(&records).unwrap();
        assert_eq!(figkit::io::parse_manifest(text.as_bytes()).unwrap(), records);
    }
});
