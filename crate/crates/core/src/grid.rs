//! Dense row-major grids shared by elevation, attention and cost layers, plus
//! the ASCII grid reader/writer and 8-bit PGM export.

use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

/// Grid index. Ordering is lexicographic on `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("line {line}: malformed header: {reason}")]
    Header { line: usize, reason: String },
    #[error("line {line}: cannot parse `{token}` as a number")]
    NotNumeric { line: usize, token: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} data rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("line {line}: non-finite value `{token}`")]
    NonFinite { line: usize, token: String },
    #[error("grid dimensions must be at least 1x1 (got {rows}x{cols})")]
    EmptyShape { rows: usize, cols: usize },
    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
}

/// Row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyShape { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(GridError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyShape { rows, cols });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn at(&self, cell: Cell) -> f64 {
        self.get(cell.row, cell.col)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn contains(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rows as slices, row 0 first.
    pub fn row_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols)
    }
}

/// Header of the ASCII grid format: `ncols nrows resolution origin_x origin_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsciiHeader {
    pub ncols: usize,
    pub nrows: usize,
    pub resolution: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

fn parse_f64(token: &str, line: usize) -> Result<f64, GridError> {
    let v: f64 = token.parse().map_err(|_| GridError::NotNumeric {
        line,
        token: token.to_string(),
    })?;
    if !v.is_finite() {
        return Err(GridError::NonFinite {
            line,
            token: token.to_string(),
        });
    }
    Ok(v)
}

/// Parses an ASCII grid document. The first data line is row 0 (minimum y).
/// Blank lines and lines starting with `#` are skipped; reported line numbers
/// are 1-based positions in the original document.
pub fn parse_ascii_grid(source: &str) -> Result<(AsciiHeader, Grid), GridError> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, htext) = lines.next().ok_or(GridError::Header {
        line: 1,
        reason: "document has no header".into(),
    })?;
    let fields: Vec<&str> = htext.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(GridError::Header {
            line: hline,
            reason: format!("expected 5 fields, found {}", fields.len()),
        });
    }
    let dim = |tok: &str, name: &str| -> Result<usize, GridError> {
        tok.parse::<usize>().map_err(|_| GridError::Header {
            line: hline,
            reason: format!("{name} `{tok}` is not a non-negative integer"),
        })
    };
    let ncols = dim(fields[0], "ncols")?;
    let nrows = dim(fields[1], "nrows")?;
    if ncols == 0 || nrows == 0 {
        return Err(GridError::Header {
            line: hline,
            reason: "ncols and nrows must be at least 1".into(),
        });
    }
    let resolution = parse_f64(fields[2], hline)?;
    if resolution <= 0.0 {
        return Err(GridError::Header {
            line: hline,
            reason: format!("resolution must be positive, got {resolution}"),
        });
    }
    let header = AsciiHeader {
        ncols,
        nrows,
        resolution,
        origin_x: parse_f64(fields[3], hline)?,
        origin_y: parse_f64(fields[4], hline)?,
    };

    let mut data = Vec::with_capacity(ncols * nrows);
    let mut found = 0usize;
    for (line, text) in lines {
        if found == nrows {
            return Err(GridError::RowCount {
                expected: nrows,
                found: found + 1,
            });
        }
        let before = data.len();
        for token in text.split_whitespace() {
            data.push(parse_f64(token, line)?);
        }
        let count = data.len() - before;
        if count != ncols {
            return Err(GridError::RowLength {
                line,
                expected: ncols,
                found: count,
            });
        }
        found += 1;
    }
    if found != nrows {
        return Err(GridError::RowCount {
            expected: nrows,
            found,
        });
    }
    let grid = Grid::from_vec(nrows, ncols, data)?;
    Ok((header, grid))
}

/// Formats a grid in the ASCII grid format. Values use Rust's shortest
/// round-trip representation so parsing the output reproduces the grid exactly.
pub fn format_ascii_grid(header: &AsciiHeader, grid: &Grid) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        grid.cols(),
        grid.rows(),
        header.resolution,
        header.origin_x,
        header.origin_y
    );
    for row in grid.row_slices() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// How values are mapped to gray levels in [`write_pgm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmScale {
    /// 0 maps to black, the grid maximum to 255. Used for nonnegative layers.
    ZeroToMax,
    /// Grid minimum maps to black, maximum to 255.
    MinToMax,
}

/// Writes a binary (P5) 8-bit PGM. Row 0 is drawn at the bottom so +row
/// points up in the image.
pub fn write_pgm<W: Write>(grid: &Grid, scale: PgmScale, mut out: W) -> io::Result<()> {
    let (lo, hi) = match scale {
        PgmScale::ZeroToMax => (0.0, grid.max()),
        PgmScale::MinToMax => (grid.min(), grid.max()),
    };
    let span = hi - lo;
    write!(out, "P5\n{} {}\n255\n", grid.cols(), grid.rows())?;
    let mut bytes = Vec::with_capacity(grid.rows() * grid.cols());
    for r in (0..grid.rows()).rev() {
        for c in 0..grid.cols() {
            let v = grid.get(r, c);
            let level = if span > 0.0 {
                (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            bytes.push(level);
        }
    }
    out.write_all(&bytes)
}
