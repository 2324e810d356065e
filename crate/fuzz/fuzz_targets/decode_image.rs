#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = figkit::io::decode_image(data) {
        assert_eq!(img.data().len(), img.width() as usize * img.height() as usize * 3);
    }
});
