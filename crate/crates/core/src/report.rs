//! Serialization of reports: JSON with 17 significant digits, aligned text,
//! and file artifacts.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::verify::CheckReport;

/// Pretty JSON formatter writing every float with 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            #[inline]
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// JSON text with a trailing newline. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::with_indent(b"  ")));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
}

/// One line per check: status, name, margin and tolerance.
pub fn render_text(reports: &[CheckReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(5);
    let mut out = format!("{:<6} {:<width$} {:>24} {:>24}\n", "status", "check", "margin", "tolerance");
    for r in reports {
        out.push_str(&format!(
            "{:<6} {:<width$} {:>24.16e} {:>24.16e}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.margin,
            r.tolerance
        ));
        for note in &r.notes {
            out.push_str(&format!("       note: {note}\n"));
        }
    }
    out
}

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Artifact {
            name: name.into(),
            contents: contents.into(),
        }
    }

    pub fn json<T: Serialize + ?Sized>(name: impl Into<String>, value: &T) -> Result<Self> {
        Ok(Artifact::new(name, to_json(value)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bit_for_bit() {
        let values = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 1.0];
        let text = to_json(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(text.contains("1.0000000000000000e0"));
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(to_json(&[f64::NAN]).unwrap().split_whitespace().collect::<String>(), "[null]");
    }

    #[test]
    fn text_table_marks_status() {
        let r = vec![CheckReport::new("a", 1.0, 0.0), CheckReport::new("bb", -1.0, 0.5)];
        let t = render_text(&r);
        assert!(t.lines().nth(1).unwrap().starts_with("PASS"));
        assert!(t.lines().nth(2).unwrap().starts_with("FAIL"));
    }
}
