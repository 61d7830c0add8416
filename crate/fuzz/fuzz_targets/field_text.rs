#![no_main]

use caplab::grid::GridFunction;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = GridFunction::parse(text) {
        assert_eq!(f.values.len(), f.grid.len());
        let back = GridFunction::parse(&f.to_text()).unwrap();
        assert_eq!(back.grid, f.grid);
    }
});
