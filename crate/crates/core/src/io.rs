//! CSV formats for count data, kernel matrices, estimation results and ground
//! truth. Floats are written with 9 significant digits; missing counts are
//! spelled `NaN`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Writer};
use nalgebra::DMatrix;

use crate::counts::CountData;
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;

/// Formats `x` like C's `%.9g`.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse { line, msg: format!("{kind:?}") },
    }
}

fn line_of(record: &StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn parse_float(field: &str, line: usize, what: &str) -> Result<f64> {
    let field = field.trim();
    field
        .parse::<f64>()
        .map_err(|_| Error::Parse { line, msg: format!("{what}: cannot parse {field:?} as a number") })
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("nan") || f.eq_ignore_ascii_case("na")
}

/// Counts read from a `bin_center,real_1,...,real_R` table.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub centers: Vec<f64>,
    pub counts: CountData,
}

pub fn parse_counts<R: Read>(reader: R) -> Result<CountTable> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.get(0) != Some("bin_center") {
        return Err(Error::Parse { line: 1, msg: "first column must be bin_center".into() });
    }
    let realizations = header.len() - 1;
    if realizations == 0 {
        return Err(Error::Parse { line: 1, msg: "no realization columns".into() });
    }
    let mut centers = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        centers.push(parse_float(&record[0], line, "bin_center")?);
        for field in record.iter().skip(1) {
            if is_missing(field) {
                values.push(f64::NAN);
                continue;
            }
            let v = parse_float(field, line, "count")?;
            if !(v >= 0.0 && v.fract() == 0.0 && v.is_finite()) {
                return Err(Error::Parse { line, msg: format!("count must be a non-negative integer, got {field}") });
            }
            values.push(v);
        }
    }
    if centers.is_empty() {
        return Err(Error::Parse { line: 2, msg: "no data rows".into() });
    }
    let counts = CountData::new(DMatrix::from_row_slice(centers.len(), realizations, &values))?;
    Ok(CountTable { centers, counts })
}

pub fn read_counts(path: impl AsRef<Path>) -> Result<CountTable> {
    parse_counts(File::open(path)?)
}

pub fn write_counts<W: Write>(out: W, centers: &[f64], counts: &CountData) -> Result<()> {
    let m = counts.matrix();
    let mut w = Writer::from_writer(out);
    let mut header = vec!["bin_center".to_string()];
    header.extend((1..=m.ncols()).map(|r| format!("real_{r}")));
    w.write_record(&header).map_err(csv_error)?;
    for (i, c) in centers.iter().enumerate() {
        let mut row = vec![format_sig(*c)];
        row.extend(m.row(i).iter().map(|v| if v.is_nan() { "NaN".into() } else { format!("{v}") }));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Headerless square matrix, one row per line.
pub fn parse_kernel_matrix<R: Read>(reader: R) -> Result<KernelMatrix> {
    let mut rdr = ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows = 0;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        for field in record.iter() {
            values.push(parse_float(field, line, "kernel entry")?);
        }
        rows += 1;
    }
    if rows == 0 || values.len() != rows * rows {
        return Err(Error::Shape(format!("kernel file holds {} entries in {rows} rows, expected a square matrix", values.len())));
    }
    KernelMatrix::from_matrix(DMatrix::from_row_slice(rows, rows, &values))
}

pub fn read_kernel_matrix(path: impl AsRef<Path>) -> Result<KernelMatrix> {
    parse_kernel_matrix(File::open(path)?)
}

/// Quantity-of-interest columns of a results row: `T = shift + BP(α_a, α_b, p, scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiColumns {
    pub shift: f64,
    pub p: f64,
    pub scale: f64,
    pub map: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
}

/// One row of the results table. The ratio law is `BP(alpha_num, alpha_denom, p, q)`;
/// invalid bins carry NaN parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub bin: usize,
    pub bin_center: f64,
    pub map_ratio: f64,
    pub alpha_num: f64,
    pub alpha_denom: f64,
    pub p: f64,
    pub q: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
    /// `ok`, `not_converged` or `invalid`.
    pub status: String,
    pub qoi: Option<QoiColumns>,
}

pub const RESULT_COLUMNS: [&str; 10] =
    ["bin", "bin_center", "map_ratio", "alpha_num", "alpha_denom", "p", "q", "hpd_lower", "hpd_upper", "status"];
pub const QOI_COLUMNS: [&str; 6] = ["qoi_shift", "qoi_p", "qoi_scale", "qoi_map", "qoi_hpd_lower", "qoi_hpd_upper"];

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let with_qoi = rows.iter().any(|r| r.qoi.is_some());
    let mut w = Writer::from_writer(out);
    let mut header: Vec<&str> = RESULT_COLUMNS.to_vec();
    if with_qoi {
        header.extend(QOI_COLUMNS);
    }
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        let mut rec = vec![r.bin.to_string()];
        rec.extend(
            [r.bin_center, r.map_ratio, r.alpha_num, r.alpha_denom, r.p, r.q, r.hpd_lower, r.hpd_upper]
                .map(format_sig),
        );
        rec.push(r.status.clone());
        if with_qoi {
            let q = r.qoi.unwrap_or(QoiColumns {
                shift: f64::NAN,
                p: f64::NAN,
                scale: f64::NAN,
                map: f64::NAN,
                hpd_lower: f64::NAN,
                hpd_upper: f64::NAN,
            });
            rec.extend([q.shift, q.p, q.scale, q.map, q.hpd_lower, q.hpd_upper].map(format_sig));
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

struct Columns {
    header: StringRecord,
}

impl Columns {
    fn index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing column {name}") })
    }

    fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }
}

fn field(record: &StringRecord, idx: usize) -> Result<&str> {
    record
        .get(idx)
        .ok_or_else(|| Error::Parse { line: line_of(record), msg: format!("missing field {}", idx + 1) })
}

fn float_at(record: &StringRecord, idx: usize, what: &str) -> Result<f64> {
    parse_float(field(record, idx)?, line_of(record), what)
}

pub fn parse_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cols = Columns { header: rdr.headers().map_err(csv_error)?.clone() };
    let idx: Vec<usize> = RESULT_COLUMNS.iter().map(|c| cols.index(c)).collect::<Result<_>>()?;
    let qidx: Option<Vec<usize>> = if cols.has(QOI_COLUMNS[0]) {
        Some(QOI_COLUMNS.iter().map(|c| cols.index(c)).collect::<Result<_>>()?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        let bin = field(&record, idx[0])?
            .parse()
            .map_err(|_| Error::Parse { line, msg: "bin must be a non-negative integer".into() })?;
        let f = |k: usize| float_at(&record, idx[k], RESULT_COLUMNS[k]);
        let qoi = match &qidx {
            Some(q) => {
                let g = |k: usize| float_at(&record, q[k], QOI_COLUMNS[k]);
                Some(QoiColumns { shift: g(0)?, p: g(1)?, scale: g(2)?, map: g(3)?, hpd_lower: g(4)?, hpd_upper: g(5)? })
            }
            None => None,
        };
        rows.push(ResultRow {
            bin,
            bin_center: f(1)?,
            map_ratio: f(2)?,
            alpha_num: f(3)?,
            alpha_denom: f(4)?,
            p: f(5)?,
            q: f(6)?,
            hpd_lower: f(7)?,
            hpd_upper: f(8)?,
            status: field(&record, idx[9])?.to_string(),
            qoi,
        });
    }
    Ok(rows)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    parse_results(File::open(path)?)
}

/// Ground truth per bin: the ratio and, for transformed problems, the quantity of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub bin_center: f64,
    pub true_z: f64,
    pub true_t: Option<f64>,
}

pub fn write_truth<W: Write>(out: W, rows: &[TruthRow]) -> Result<()> {
    let with_t = rows.iter().any(|r| r.true_t.is_some());
    let mut w = Writer::from_writer(out);
    if with_t {
        w.write_record(["bin_center", "true_z", "true_t"]).map_err(csv_error)?;
    } else {
        w.write_record(["bin_center", "true_z"]).map_err(csv_error)?;
    }
    for r in rows {
        let mut rec = vec![format_sig(r.bin_center), format_sig(r.true_z)];
        if with_t {
            rec.push(format_sig(r.true_t.unwrap_or(f64::NAN)));
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_truth<R: Read>(reader: R) -> Result<Vec<TruthRow>> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cols = Columns { header: rdr.headers().map_err(csv_error)?.clone() };
    let (ci, zi) = (cols.index("bin_center")?, cols.index("true_z")?);
    let ti = cols.has("true_t").then(|| cols.index("true_t")).transpose()?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        rows.push(TruthRow {
            bin_center: float_at(&record, ci, "bin_center")?,
            true_z: float_at(&record, zi, "true_z")?,
            true_t: ti.map(|i| float_at(&record, i, "true_t")).transpose()?,
        });
    }
    Ok(rows)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<TruthRow>> {
    parse_truth(File::open(path)?)
}
