//! Plain-text box annotations and the CSV formats used for curves, traces,
//! PR curves and target maps.
//!
//! Annotation lines look like `image_id x1 y1 x2 y2 x3 y3 x4 y4 [score]`.
//! Fields are whitespace-separated and everything after `#` is ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::analysis::Curve;
use crate::descent::FitTrace;
use crate::error::{Error, Result};
use crate::geom::{convex_hull, min_bounding_box, OrientedBox, Point2};
use crate::metrics::PrCurve;
use crate::targets::{Detection, Grid};

/// Relative tolerance for accepting parsed corners as a rectangle.
pub const QUAD_TOL: f64 = 1e-3;

/// Significant digits used for CSV values.
pub const CSV_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub obb: OrientedBox,
    pub score: Option<f64>,
}

/// All boxes of one image, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub boxes: Vec<Annotation>,
}

impl AnnotationRecord {
    pub fn obbs(&self) -> Vec<OrientedBox> {
        self.boxes.iter().map(|a| a.obb).collect()
    }

    /// Boxes as scored detections; unscored boxes get score 1.
    pub fn detections(&self) -> Vec<Detection> {
        self.boxes
            .iter()
            .map(|a| Detection {
                center: a.obb.center(),
                score: a.score.unwrap_or(1.0),
                obb: a.obb,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedAnnotations {
    /// Sorted by image id.
    pub records: Vec<AnnotationRecord>,
    pub warnings: Vec<ParseWarning>,
}

impl ParsedAnnotations {
    pub fn get(&self, image_id: &str) -> Option<&AnnotationRecord> {
        self.records
            .binary_search_by(|r| r.image_id.as_str().cmp(image_id))
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn box_count(&self) -> usize {
        self.records.iter().map(|r| r.boxes.len()).sum()
    }
}

pub fn parse_annotations(text: &str) -> Result<ParsedAnnotations> {
    let mut grouped: BTreeMap<String, Vec<Annotation>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        let Some(image_id) = fields.next() else {
            continue;
        };
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("not a finite number: {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let score = match values.len() {
            8 => None,
            9 => Some(values[8]),
            n => {
                return Err(parse_err(
                    line,
                    format!("expected 8 or 9 numbers, found {n}"),
                ))
            }
        };
        let corners: [Point2; 4] =
            std::array::from_fn(|i| Point2::new(values[2 * i], values[2 * i + 1]));
        let obb = match OrientedBox::with_tolerance(corners, QUAD_TOL) {
            Ok(b) => b,
            Err(_) => {
                let b = convex_hull(&corners)
                    .and_then(|h| min_bounding_box(&h))
                    .map_err(|e| parse_err(line, format!("degenerate quad: {e}")))?;
                warnings.push(ParseWarning {
                    line,
                    message: "quad is not a rectangle; replaced by its minimum bounding box".into(),
                });
                b
            }
        };
        grouped
            .entry(image_id.to_string())
            .or_default()
            .push(Annotation { obb, score });
    }
    Ok(ParsedAnnotations {
        records: grouped
            .into_iter()
            .map(|(image_id, boxes)| AnnotationRecord { image_id, boxes })
            .collect(),
        warnings,
    })
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

pub fn write_annotations(records: &[AnnotationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        for a in &r.boxes {
            out.push_str(&r.image_id);
            for c in a.obb.corners() {
                let _ = write!(out, " {:?} {:?}", c.x, c.y);
            }
            if let Some(s) = a.score {
                let _ = write!(out, " {s:?}");
            }
            out.push('\n');
        }
    }
    out
}

/// Formats `x` with `digits` significant digits, dropping trailing zeros.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn num(x: f64) -> String {
    fmt_sig(x, CSV_DIGITS)
}

pub fn curves_to_csv(curves: &[Curve]) -> String {
    write_csv(
        &["x", "y", "label"],
        curves.iter().flat_map(|c| {
            c.points
                .iter()
                .map(|&(x, y)| vec![num(x), num(y), c.label.clone()])
        }),
    )
}

/// Reads curves back, one per run of consecutive rows sharing a label.
pub fn parse_curves_csv(text: &str) -> Result<Vec<Curve>> {
    let mut curves: Vec<Curve> = Vec::new();
    for (line, row) in read_csv(text, &["x", "y", "label"])? {
        let point = (parse_num(line, &row[0])?, parse_num(line, &row[1])?);
        let label = &row[2];
        match curves.last_mut() {
            Some(c) if &c.label == label => c.points.push(point),
            _ => curves.push(Curve {
                label: label.clone(),
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

pub fn trace_to_csv(trace: &FitTrace) -> String {
    write_csv(
        &["step", "loss", "iou"],
        trace
            .records
            .iter()
            .map(|r| vec![r.step.to_string(), num(r.loss), num(r.iou)]),
    )
}

/// `(step, loss, iou)` rows of a trace file.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(usize, f64, f64)>> {
    read_csv(text, &["step", "loss", "iou"])?
        .into_iter()
        .map(|(line, row)| {
            Ok((
                parse_index(line, &row[0])?,
                parse_num(line, &row[1])?,
                parse_num(line, &row[2])?,
            ))
        })
        .collect()
}

pub fn pr_curve_to_csv(curve: &PrCurve) -> String {
    write_csv(
        &["recall", "precision", "score"],
        curve
            .points
            .iter()
            .map(|p| vec![num(p.recall), num(p.precision), num(p.score)]),
    )
}

/// Every cell of `grid` as `y,x,channel,value`, row-major.
pub fn grid_to_csv(grid: &Grid) -> String {
    let rows = (0..grid.height()).flat_map(|y| {
        (0..grid.width()).flat_map(move |x| {
            grid.cell(x, y)
                .iter()
                .enumerate()
                .map(move |(c, v)| vec![y.to_string(), x.to_string(), c.to_string(), num(*v)])
        })
    });
    write_csv(&["y", "x", "channel", "value"], rows)
}

pub fn parse_grid_csv(text: &str) -> Result<Grid> {
    let rows = read_csv(text, &["y", "x", "channel", "value"])?;
    if rows.is_empty() {
        return Err(parse_err(1, "grid has no cells".into()));
    }
    let mut cells = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        cells.push((
            parse_index(*line, &row[0])?,
            parse_index(*line, &row[1])?,
            parse_index(*line, &row[2])?,
            parse_num(*line, &row[3])?,
        ));
    }
    let height = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let width = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let channels = cells.iter().map(|c| c.2).max().unwrap_or(0) + 1;
    let expected = width * height * channels;
    if cells.len() != expected {
        return Err(parse_err(
            1,
            format!(
                "expected {expected} cells for a {width}x{height}x{channels} grid, found {}",
                cells.len()
            ),
        ));
    }
    let mut grid = Grid::zeros(width, height, channels);
    for (y, x, c, v) in cells {
        grid.set(x, y, c, v);
    }
    Ok(grid)
}

fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn read_csv(text: &str, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_err(
            1,
            format!("expected header {:?}, found {:?}", header.join(","), found),
        ));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            Ok((line, rec.iter().map(str::to_string).collect()))
        })
        .collect()
}

fn parse_num(line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {s:?}")))
}

fn parse_index(line: usize, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not an index: {s:?}")))
}
