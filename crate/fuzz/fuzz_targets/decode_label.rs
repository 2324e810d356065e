#![no_main]

use figkit::corpus::{decode_label, Ontology, DEFAULT_DECODE_TOLERANCE};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(img) = figkit::io::decode_image(data) else { return };
    for ont in [Ontology::FiveClass, Ontology::ThreeClass] {
        if let Ok(map) = decode_label(&img, ont, DEFAULT_DECODE_TOLERANCE) {
            assert!(map.data().iter().all(|&c| (c as usize) < ont.arity()));
            assert_eq!(map.class_counts().iter().sum::<u64>(), map.data().len() as u64);
        }
    }
});
