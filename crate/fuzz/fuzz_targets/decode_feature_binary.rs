#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = figkit::io::decode_feature_binary(data) {
        let bytes = figkit::io::encode_feature_binary(&records).unwrap();
        assert_eq!(figkit::io::decode_feature_binary(&bytes).unwrap(), records);
    }
});
