//! JSON and CSV rendering with every float printed to 17 significant digits.

use std::io::{self, Write};

use nalgebra::{Complex, DMatrix, DVector};
use serde::ser::{Serialize, SerializeSeq};
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

/// Round-trip safe rendering of a double: `d.dddddddddddddddde±x`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Pretty JSON whose floats use [`fmt_f64`].
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

/// Square matrix with a header row and a leading label column.
pub fn matrix_csv(labels: &[String], m: &DMatrix<f64>) -> String {
    let mut out = String::from("node");
    for id in labels {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in labels.iter().enumerate() {
        out.push_str(id);
        for j in 0..m.ncols() {
            out.push(',');
            out.push_str(&fmt_f64(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Serializes a matrix as a list of rows.
pub struct Rows<'a, T: nalgebra::Scalar>(pub &'a DMatrix<T>);

impl<T: nalgebra::Scalar + Serialize> Serialize for Rows<'_, T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.nrows()))?;
        for r in 0..self.0.nrows() {
            let row: Vec<&T> = (0..self.0.ncols()).map(|c| &self.0[(r, c)]).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

/// Complex number as `{"re": .., "im": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for ComplexValue {
    fn from(z: Complex<f64>) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

pub fn complex_vec(v: &DVector<Complex<f64>>) -> Vec<ComplexValue> {
    v.iter().map(|&z| z.into()).collect()
}

pub fn complex_matrix(m: &DMatrix<Complex<f64>>) -> DMatrix<ComplexValue> {
    m.map(ComplexValue::from)
}
