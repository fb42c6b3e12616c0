//! On-disk formats.
//!
//! Every file is plain text: `#`-prefixed header lines carrying the grid
//! manifest and provenance (seed, config digest, format version), then
//! comma-separated records. Floats are written in scientific notation with 17
//! significant digits, so files parse back to bit-identical values and
//! identical invocations produce byte-identical files.

use crate::error::Error;
use crate::grid::SuperpixelGrid;
use crate::model::{BetaMap, ShotRecord};
use crate::pipeline::{Dataset, Metrics, SweepReport};
use crate::synth::{EfficiencyField, ShotTruth};
use crate::Result;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const FORMAT_VERSION: &str = "1";

/// Threshold above which a shot's frequency factor is flagged at load time.
pub const FREQ_FACTOR_WARN: f64 = 0.01;

/// Full-precision float formatting: 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a 64-bit hash, used as the config digest embedded in outputs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn digest_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

/// Provenance embedded in every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputMeta {
    pub seed: u64,
    pub config_digest: String,
}

/// Provenance and load-time warnings recovered from a file.
#[derive(Debug, Clone, Default)]
pub struct ReadMeta {
    pub seed: u64,
    pub config_digest: String,
    pub warnings: Vec<String>,
}

fn grid_manifest(grid: &SuperpixelGrid) -> String {
    format!(
        "rows={} cols={} block_size={} left_cols={} order=row-major",
        grid.rows(),
        grid.cols(),
        grid.block_size(),
        grid.left_cols()
    )
}

fn parse_grid_manifest(value: &str, path: &str, line: usize) -> Result<SuperpixelGrid> {
    let mut rows = None;
    let mut cols = None;
    let mut block_size = None;
    let mut left_cols = None;
    for part in value.split_whitespace() {
        let (key, v) = part.split_once('=').ok_or_else(|| Error::Parse {
            path: path.into(),
            line,
            message: format!("malformed grid manifest entry '{part}'"),
        })?;
        match key {
            "rows" | "cols" | "block_size" | "left_cols" => {
                let parsed: usize = v.parse().map_err(|_| Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("bad integer '{v}' for {key}"),
                })?;
                match key {
                    "rows" => rows = Some(parsed),
                    "cols" => cols = Some(parsed),
                    "block_size" => block_size = Some(parsed),
                    _ => left_cols = Some(parsed),
                }
            }
            "order" => {
                if v != "row-major" {
                    return Err(Error::Parse {
                        path: path.into(),
                        line,
                        message: format!("unsupported index ordering '{v}'"),
                    });
                }
            }
            _ => {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("unknown grid manifest key '{key}'"),
                })
            }
        }
    }
    match (rows, cols, block_size, left_cols) {
        (Some(r), Some(c), Some(b), Some(l)) => SuperpixelGrid::new(r, c, b, l),
        _ => Err(Error::Parse {
            path: path.into(),
            line,
            message: "grid manifest missing a required key".into(),
        }),
    }
}

fn parse_f64(s: &str, path: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse {
        path: path.into(),
        line,
        message: format!("bad float '{s}'"),
    })
}

fn parse_u64(s: &str, path: &str, line: usize) -> Result<u64> {
    s.trim().parse().map_err(|_| Error::Parse {
        path: path.into(),
        line,
        message: format!("bad integer '{s}'"),
    })
}

/// Header lines read from a file: `(key, value, line_number)` triples plus the
/// first data line index.
struct Header {
    entries: Vec<(String, String, usize)>,
    body_start: usize,
    lines: Vec<String>,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line?);
    }
    Ok(lines)
}

fn parse_header(path: &Path, expected_kind: &str) -> Result<Header> {
    let lines = read_lines(path)?;
    let path_str = path.display().to_string();
    let mut entries = Vec::new();
    let mut body_start = lines.len();
    for (i, line) in lines.iter().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if i == 0 {
                let expected = format!("fluorocal {expected_kind} v{FORMAT_VERSION}");
                if rest != expected {
                    return Err(Error::Parse {
                        path: path_str,
                        line: 1,
                        message: format!("expected header '{expected}', found '{rest}'"),
                    });
                }
                continue;
            }
            if let Some((key, value)) = rest.split_once(':') {
                entries.push((key.trim().to_string(), value.trim().to_string(), i + 1));
            }
        } else {
            body_start = i;
            break;
        }
    }
    if body_start == 0 {
        return Err(Error::Parse {
            path: path_str,
            line: 1,
            message: format!("missing 'fluorocal {expected_kind}' header"),
        });
    }
    Ok(Header {
        entries,
        body_start,
        lines,
    })
}

impl Header {
    fn get(&self, key: &str, path: &str) -> Result<(&str, usize)> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
            .ok_or_else(|| Error::Parse {
                path: path.into(),
                line: 1,
                message: format!("missing header key '{key}'"),
            })
    }

    fn meta(&self, path: &str) -> Result<(u64, String)> {
        let (seed, l) = self.get("seed", path)?;
        let seed = parse_u64(seed, path, l)?;
        let (digest, _) = self.get("config_digest", path)?;
        Ok((seed, digest.to_string()))
    }
}

fn open_writer(path: &Path) -> Result<BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

/// Write a dataset: grid manifest, contrast, counts scale, then one record
/// per shot (`shot_id,cavity_jz,freq_factor,` then the counts in index order).
pub fn write_dataset(path: &Path, dataset: &Dataset, meta: &OutputMeta) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "# fluorocal dataset v{FORMAT_VERSION}")?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_digest: {}", meta.config_digest)?;
    writeln!(w, "# grid: {}", grid_manifest(dataset.grid()))?;
    writeln!(w, "# contrast: {}", fmt_f64(dataset.contrast()))?;
    writeln!(w, "# counts_scale: {}", fmt_f64(dataset.counts_scale()))?;
    writeln!(w, "# columns: shot_id,cavity_jz,freq_factor,counts...")?;
    let mut line = String::new();
    for shot in dataset.shots() {
        line.clear();
        write!(
            line,
            "{},{},{}",
            shot.shot_id,
            fmt_f64(shot.cavity_jz),
            fmt_f64(shot.freq_factor)
        )
        .expect("string write");
        for c in &shot.counts {
            line.push(',');
            line.push_str(&fmt_f64(*c));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(Dataset, ReadMeta)> {
    let header = parse_header(path, "dataset")?;
    let path_str = path.display().to_string();
    let (grid_str, grid_line) = header.get("grid", &path_str)?;
    let grid = parse_grid_manifest(grid_str, &path_str, grid_line)?;
    let (contrast, cl) = header.get("contrast", &path_str)?;
    let contrast = parse_f64(contrast, &path_str, cl)?;
    let (scale, sl) = header.get("counts_scale", &path_str)?;
    let counts_scale = parse_f64(scale, &path_str, sl)?;
    let (seed, config_digest) = header.meta(&path_str)?;

    let n = grid.n();
    let mut shots = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in header.lines.iter().enumerate().skip(header.body_start) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut fields = line.split(',');
        let shot_id = parse_u64(
            fields.next().ok_or_else(|| Error::Parse {
                path: path_str.clone(),
                line: lineno,
                message: "empty record".into(),
            })?,
            &path_str,
            lineno,
        )?;
        let cavity_jz = parse_f64(
            fields.next().ok_or_else(|| missing_field(&path_str, lineno))?,
            &path_str,
            lineno,
        )?;
        let freq_factor = parse_f64(
            fields.next().ok_or_else(|| missing_field(&path_str, lineno))?,
            &path_str,
            lineno,
        )?;
        let counts: Vec<f64> = fields
            .map(|f| parse_f64(f, &path_str, lineno))
            .collect::<Result<_>>()?;
        if counts.len() != n {
            return Err(Error::Parse {
                path: path_str.clone(),
                line: lineno,
                message: format!("expected {n} counts, found {}", counts.len()),
            });
        }
        if freq_factor.abs() > FREQ_FACTOR_WARN {
            warnings.push(format!(
                "shot {shot_id}: frequency factor {freq_factor:.3e} is unusually large"
            ));
        }
        shots.push(ShotRecord {
            shot_id,
            cavity_jz,
            freq_factor,
            counts,
        });
    }
    let dataset = Dataset::new(grid, shots, contrast, counts_scale)?;
    Ok((
        dataset,
        ReadMeta {
            seed,
            config_digest,
            warnings,
        },
    ))
}

fn missing_field(path: &str, line: usize) -> Error {
    Error::Parse {
        path: path.into(),
        line,
        message: "record has too few fields".into(),
    }
}

/// Write a weight map: grid manifest, bias, then one weight per line in
/// index order.
pub fn write_beta(path: &Path, beta: &BetaMap, meta: &OutputMeta) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "# fluorocal beta-map v{FORMAT_VERSION}")?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_digest: {}", meta.config_digest)?;
    writeln!(w, "# grid: {}", grid_manifest(beta.grid()))?;
    writeln!(w, "# bias: {}", fmt_f64(beta.bias()))?;
    for v in beta.values() {
        writeln!(w, "{}", fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_beta(path: &Path) -> Result<(BetaMap, ReadMeta)> {
    let header = parse_header(path, "beta-map")?;
    let path_str = path.display().to_string();
    let (grid_str, grid_line) = header.get("grid", &path_str)?;
    let grid = parse_grid_manifest(grid_str, &path_str, grid_line)?;
    let (bias, bl) = header.get("bias", &path_str)?;
    let bias = parse_f64(bias, &path_str, bl)?;
    let (seed, config_digest) = header.meta(&path_str)?;
    let mut values = Vec::with_capacity(grid.n());
    for (i, line) in header.lines.iter().enumerate().skip(header.body_start) {
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_f64(line, &path_str, i + 1)?);
    }
    if values.len() != grid.n() {
        return Err(Error::Parse {
            path: path_str,
            line: header.lines.len(),
            message: format!("expected {} weights, found {}", grid.n(), values.len()),
        });
    }
    let beta = BetaMap::new(grid, bias, values)?;
    Ok((
        beta,
        ReadMeta {
            seed,
            config_digest,
            warnings: Vec::new(),
        },
    ))
}

/// Write the generator's efficiency field (grid manifest plus one value per
/// superpixel).
pub fn write_field(
    path: &Path,
    field: &EfficiencyField,
    grid: &SuperpixelGrid,
    meta: &OutputMeta,
) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "# fluorocal efficiency-field v{FORMAT_VERSION}")?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_digest: {}", meta.config_digest)?;
    writeln!(w, "# grid: {}", grid_manifest(grid))?;
    writeln!(w, "# field_seed: {}", field.seed())?;
    writeln!(w, "# amplitude: {}", fmt_f64(field.amplitude()))?;
    writeln!(
        w,
        "# correlation_length: {}",
        fmt_f64(field.correlation_length())
    )?;
    for v in field.values() {
        writeln!(w, "{}", fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(Vec<f64>, ReadMeta)> {
    let header = parse_header(path, "efficiency-field")?;
    let path_str = path.display().to_string();
    let (seed, config_digest) = header.meta(&path_str)?;
    let mut values = Vec::new();
    for (i, line) in header.lines.iter().enumerate().skip(header.body_start) {
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_f64(line, &path_str, i + 1)?);
    }
    Ok((
        values,
        ReadMeta {
            seed,
            config_digest,
            warnings: Vec::new(),
        },
    ))
}

/// One truth sidecar row: shot id, true population difference, true atoms.
pub type TruthRow = (u64, f64, f64);

/// Write the truth sidecar: `shot_id,true_jz,true_n` per shot.
pub fn write_truths(path: &Path, truths: &[ShotTruth], meta: &OutputMeta) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "# fluorocal truth v{FORMAT_VERSION}")?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_digest: {}", meta.config_digest)?;
    writeln!(w, "# columns: shot_id,true_jz,true_n")?;
    for (i, t) in truths.iter().enumerate() {
        writeln!(w, "{},{},{}", i, fmt_f64(t.true_jz), fmt_f64(t.true_n))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truths(path: &Path) -> Result<(Vec<TruthRow>, ReadMeta)> {
    let header = parse_header(path, "truth")?;
    let path_str = path.display().to_string();
    let (seed, config_digest) = header.meta(&path_str)?;
    let mut rows = Vec::new();
    for (i, line) in header.lines.iter().enumerate().skip(header.body_start) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut fields = line.split(',');
        let id = parse_u64(
            fields.next().ok_or_else(|| missing_field(&path_str, lineno))?,
            &path_str,
            lineno,
        )?;
        let jz = parse_f64(
            fields.next().ok_or_else(|| missing_field(&path_str, lineno))?,
            &path_str,
            lineno,
        )?;
        let n = parse_f64(
            fields.next().ok_or_else(|| missing_field(&path_str, lineno))?,
            &path_str,
            lineno,
        )?;
        rows.push((id, jz, n));
    }
    Ok((
        rows,
        ReadMeta {
            seed,
            config_digest,
            warnings: Vec::new(),
        },
    ))
}

/// Write a sweep report as a comma-separated table with a header row.
pub fn write_sweep(path: &Path, report: &SweepReport, meta: &OutputMeta) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "# fluorocal sweep v{FORMAT_VERSION}")?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_digest: {}", meta.config_digest)?;
    writeln!(
        w,
        "axis,value,delta_theta,db_below_qpn,mean_n,sample_count,delta_theta_stderr,train_error,validation_error,m_c"
    )?;
    for p in &report.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            report.axis.as_str(),
            fmt_f64(p.axis_value),
            fmt_f64(p.validation.delta_theta),
            fmt_f64(p.validation.db_below_qpn),
            fmt_f64(p.validation.mean_n),
            p.validation.sample_count,
            fmt_f64(p.validation.delta_theta_stderr),
            fmt_f64(p.train_error),
            fmt_f64(p.validation_error),
            p.m_c
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Write an evaluation report: one row per analysis method.
pub fn write_metrics_report(
    path: &Path,
    rows: &[(String, Metrics)],
    meta: &OutputMeta,
) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "# fluorocal metrics v{FORMAT_VERSION}")?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_digest: {}", meta.config_digest)?;
    writeln!(
        w,
        "method,delta_theta,db_below_qpn,mean_n,sample_count,delta_theta_stderr"
    )?;
    for (label, m) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            label,
            fmt_f64(m.delta_theta),
            fmt_f64(m.db_below_qpn),
            fmt_f64(m.mean_n),
            m.sample_count,
            fmt_f64(m.delta_theta_stderr)
        )?;
    }
    w.flush()?;
    Ok(())
}
