#![no_main]

use caplab::grid::RegionMask;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mask) = RegionMask::parse(text) {
        assert_eq!(mask.inside.len(), mask.grid.len());
        assert_eq!(RegionMask::parse(&mask.to_text()).unwrap(), mask);
    }
});
