//! Serialization: a self-describing binary container for stage/cascade
//! scattering matrices and a fixed-precision CSV writer for experiment
//! tables.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Result, TmiError};
use crate::experiments::ExperimentResult;
use crate::green::{GreenBasis, GreenFunction};
use crate::grid::TemporalGrid;

const MAGIC: &[u8; 4] = b"TMIG";
const VERSION: u32 = 1;

fn block_bytes(buf: &mut Vec<u8>, m: &Array2<C64>) {
    for v in m.iter() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
}

/// Write the four blocks with a small self-describing header; the
/// round-trip through `load_matrix` is bit-exact.
pub fn dump_matrix(g: &GreenFunction, path: &Path) -> Result<()> {
    let n_basis = g.n_basis();
    let mut buf = Vec::with_capacity(32 + 64 * n_basis * n_basis);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let (tag, kept): (u8, &[i64]) = match &g.basis {
        GreenBasis::Delta => (0, &[]),
        GreenBasis::Fourier { kept } => (1, kept),
    };
    buf.push(tag);
    buf.extend_from_slice(&(g.grid.n_points() as u64).to_le_bytes());
    buf.extend_from_slice(&(n_basis as u64).to_le_bytes());
    buf.extend_from_slice(&g.grid.dt().to_le_bytes());
    buf.extend_from_slice(&g.grid.t_start().to_le_bytes());
    buf.extend_from_slice(&g.lambda_s_nm.to_le_bytes());
    buf.extend_from_slice(&g.lambda_r_nm.to_le_bytes());
    for &k in kept {
        buf.extend_from_slice(&k.to_le_bytes());
    }
    for m in [&g.g_ss, &g.g_sr, &g.g_rs, &g.g_rr] {
        block_bytes(&mut buf, m);
    }
    std::fs::write(path, buf)?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| TmiError::Format("file truncated".into()))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_block(r: &mut impl Read, n: usize) -> Result<Array2<C64>> {
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        data.push(C64::new(re, im));
    }
    Array2::from_shape_vec((n, n), data).map_err(|e| TmiError::Format(e.to_string()))
}

/// Read a matrix written by `dump_matrix`, validating the header before
/// allocating anything; a short or corrupt file yields an error, never a
/// partial matrix.
pub fn load_matrix(path: &Path) -> Result<GreenFunction> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut f, &mut magic)?;
    if &magic != MAGIC {
        return Err(TmiError::Format(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let mut vb = [0u8; 4];
    read_exact(&mut f, &mut vb)?;
    let version = u32::from_le_bytes(vb);
    if version != VERSION {
        return Err(TmiError::Format(format!(
            "unsupported version {version}, this reader handles {VERSION}"
        )));
    }
    let mut tag = [0u8; 1];
    read_exact(&mut f, &mut tag)?;
    let n_grid = read_u64(&mut f)? as usize;
    let n_basis = read_u64(&mut f)? as usize;
    let dt = read_f64(&mut f)?;
    let t_start = read_f64(&mut f)?;
    let lambda_s_nm = read_f64(&mut f)?;
    let lambda_r_nm = read_f64(&mut f)?;
    let basis = match tag[0] {
        0 => {
            if n_basis != n_grid {
                return Err(TmiError::Format(format!(
                    "delta basis needs n_basis = n_grid, got {n_basis} vs {n_grid}"
                )));
            }
            GreenBasis::Delta
        }
        1 => {
            let mut kept = Vec::with_capacity(n_basis);
            for _ in 0..n_basis {
                let mut b = [0u8; 8];
                read_exact(&mut f, &mut b)?;
                kept.push(i64::from_le_bytes(b));
            }
            GreenBasis::Fourier { kept }
        }
        t => return Err(TmiError::Format(format!("unknown basis tag {t}"))),
    };
    let grid = TemporalGrid::new(n_grid, t_start, dt)?;
    let g_ss = read_block(&mut f, n_basis)?;
    let g_sr = read_block(&mut f, n_basis)?;
    let g_rs = read_block(&mut f, n_basis)?;
    let g_rr = read_block(&mut f, n_basis)?;
    let mut rest = [0u8; 1];
    if f.read(&mut rest)? != 0 {
        return Err(TmiError::Format("trailing bytes after blocks".into()));
    }
    Ok(GreenFunction {
        grid,
        lambda_s_nm,
        lambda_r_nm,
        basis,
        g_ss,
        g_sr,
        g_rs,
        g_rr,
    })
}

/// 17-significant-digit scientific notation: round-trips f64 exactly and
/// keeps text output byte-deterministic.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a result table as CSV: header row of axis names, LF line
/// endings, `.` decimal separator.
pub fn result_to_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    out.push_str(&result.axes.join(","));
    out.push('\n');
    for row in &result.rows {
        let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Write the table in one call so a failed run leaves no partial file.
pub fn write_result_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(result_to_csv(result).as_bytes())?;
    Ok(())
}
