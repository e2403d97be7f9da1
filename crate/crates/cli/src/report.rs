//! Report emission: fixed-format JSON, aligned text and CSV.

use mmop_core::Poly;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use std::io;

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
struct FixedFloats<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident $(, $arg:ident: $ty:ty)*;)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            CompactFormatter.write_null(w)
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        begin_object_value;
        end_object_value;
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8")
}

/// Coefficient table of a column of polynomials: one list per component.
pub fn coeff_table(polys: &[Poly]) -> Vec<Vec<f64>> {
    polys.iter().map(|p| p.coeffs().to_vec()).collect()
}

/// Aligned plain-text table.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn render(&self) -> String {
        let ncols = self.header.len();
        let mut width = vec![0; ncols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |r: &[String]| {
            let cells: Vec<String> = r
                .iter()
                .zip(&width)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            cells.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        for r in &self.rows {
            out += &line(r);
        }
        out
    }
}

pub fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

/// CSV of polynomial families: `n,component,degree,coefficient`.
pub fn family_csv(fam: &[Vec<Poly>]) -> String {
    let mut out = String::from("n,component,degree,coefficient\n");
    for (n, col) in fam.iter().enumerate() {
        for (c, p) in col.iter().enumerate() {
            for (k, v) in p.coeffs().iter().enumerate() {
                out += &format!("{n},{c},{k},{v:.16e}\n");
            }
        }
    }
    out
}

/// CSV of the Ω band: `n,offset,value` for `Omega_{n+offset, n}`.
pub fn band_csv(omega: &[Vec<f64>]) -> String {
    let mut out = String::from("n,offset,value\n");
    for (n, col) in omega.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out += &format!("{n},{},{v:.16e}\n", i + 1);
        }
    }
    out
}
