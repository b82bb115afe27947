//! Plain-text dataset formats.
//!
//! * current matrix: a `N,T` line, then one line of `N` samples per period;
//! * power series: `timestamp,watts` CSV with a constant step;
//! * factor model: `#signatures N K` and `#activations K T` blocks, one
//!   matrix row per line;
//! * transition table and activation template: CSV keyed by subset `tau`.
//!
//! Values are written with 9 significant digits. Timestamps use the
//! shortest representation that reads back exactly.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use loadforge_core::factorize::{CurrentMatrix, FactorModel};
use loadforge_core::genmodel::{ActivationTemplate, DayCalendar, TimePartition, TransitionTable};
use loadforge_core::stats::{MetricReport, PowerSeries};
use loadforge_core::Matrix;

use crate::error::{CliError, Result};

/// `v` with 9 significant digits, in fixed notation for moderate exponents.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if (0..9).contains(&exp) {
        let (int, frac) = digits.split_at(exp as usize + 1);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    } else if (-5..0).contains(&exp) {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{}", digits.trim_end_matches('0'))
    } else {
        format!("{sign}{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn fmt_time(t: f64) -> String {
    format!("{t}")
}

/// Creates `path` (and its parent directories) and runs `body` on a
/// buffered writer.
pub fn save(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_row(w: &mut dyn Write, values: impl IntoIterator<Item = f64>) -> io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b",")?;
        }
        first = false;
        w.write_all(fmt_num(v).as_bytes())?;
    }
    w.write_all(b"\n")
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_f64(path: &Path, line: usize, token: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::parse(path, line, format!("not a number: {:?}", token.trim())))
}

fn parse_usize(path: &Path, line: usize, token: &str) -> Result<usize> {
    token
        .trim()
        .parse::<usize>()
        .map_err(|_| CliError::parse(path, line, format!("not a non-negative integer: {:?}", token.trim())))
}

/// Parses a line of exactly `expected` finite numbers. `row_of` maps a
/// column position to the `(row, col)` reported for non-finite values.
fn parse_values(
    path: &Path,
    line: usize,
    text: &str,
    expected: usize,
    row_of: impl Fn(usize) -> (usize, usize),
) -> Result<Vec<f64>> {
    let tokens: Vec<&str> = text.split(',').collect();
    if tokens.len() != expected {
        return Err(CliError::parse(
            path,
            line,
            format!("expected {expected} values, found {}", tokens.len()),
        ));
    }
    tokens
        .iter()
        .enumerate()
        .map(|(i, tok)| {
            let v = parse_f64(path, line, tok)?;
            if !v.is_finite() {
                let (row, col) = row_of(i);
                return Err(CliError::NonFinite {
                    path: path.into(),
                    line,
                    row,
                    col,
                });
            }
            Ok(v)
        })
        .collect()
}

pub fn write_current(w: &mut dyn Write, current: &CurrentMatrix) -> io::Result<()> {
    writeln!(w, "{},{}", current.samples_per_period(), current.num_periods())?;
    for t in 0..current.num_periods() {
        write_row(w, current.period(t).iter().copied())?;
    }
    Ok(())
}

pub fn parse_current(path: &Path, text: &str) -> Result<CurrentMatrix> {
    let mut it = lines(text);
    let (hline, header) = it.next().ok_or_else(|| CliError::parse(path, 1, "empty current file"))?;
    let (n, t) = header
        .split_once(',')
        .ok_or_else(|| CliError::parse(path, hline, "expected a `N,T` header"))?;
    let (n, t) = (parse_usize(path, hline, n)?, parse_usize(path, hline, t)?);
    if n < 2 || t < 1 {
        return Err(CliError::parse(path, hline, format!("need N >= 2 and T >= 1, got {n},{t}")));
    }
    let mut data = Vec::with_capacity(n * t);
    let mut periods = 0;
    for (line, text) in it {
        if periods == t {
            return Err(CliError::parse(path, line, format!("more than the {t} declared periods")));
        }
        let period = periods;
        data.extend(parse_values(path, line, text, n, |i| (i, period))?);
        periods += 1;
    }
    if periods != t {
        return Err(CliError::parse(
            path,
            hline,
            format!("header declares {t} periods, file has {periods}"),
        ));
    }
    Ok(CurrentMatrix::from_periods(n, data)?)
}

pub fn read_current(path: &Path) -> Result<CurrentMatrix> {
    parse_current(path, &read_text(path)?)
}

pub fn write_power(w: &mut dyn Write, p: &PowerSeries) -> io::Result<()> {
    writeln!(w, "timestamp,watts")?;
    for (i, &v) in p.watts().iter().enumerate() {
        writeln!(w, "{},{}", fmt_time(p.timestamp(i)), fmt_num(v))?;
    }
    Ok(())
}

/// Parses a power CSV. The step is the smallest timestamp difference; any
/// larger difference is reported as a gap at the first missing timestamp.
/// A single-row file uses `default_interval`.
pub fn parse_power(path: &Path, text: &str, default_interval: f64) -> Result<PowerSeries> {
    let mut rows = Vec::new();
    for (line, text) in lines(text) {
        if rows.is_empty() && text.starts_with("timestamp") {
            continue;
        }
        let v = parse_values(path, line, text, 2, |i| (rows.len(), i))?;
        rows.push((line, v[0], v[1]));
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, 1, "no samples"));
    }
    let mut interval = f64::INFINITY;
    for w in rows.windows(2) {
        let d = w[1].1 - w[0].1;
        if d.is_nan() || d <= 0.0 {
            return Err(CliError::parse(path, w[1].0, "timestamps must be strictly increasing"));
        }
        interval = interval.min(d);
    }
    if !interval.is_finite() {
        interval = default_interval;
    }
    for w in rows.windows(2) {
        let d = w[1].1 - w[0].1;
        let steps = d / interval;
        if (steps - 1.0).abs() <= 1e-6 {
            continue;
        }
        if (steps - steps.round()).abs() <= 1e-6 {
            return Err(CliError::Gap {
                path: path.into(),
                line: w[1].0,
                timestamp: w[0].1 + interval,
            });
        }
        return Err(CliError::parse(
            path,
            w[1].0,
            format!("timestamp step {d} is not a multiple of the {interval} s sampling step"),
        ));
    }
    let start = rows[0].1;
    Ok(PowerSeries::new(start, interval, rows.into_iter().map(|r| r.2).collect())?)
}

pub fn read_power(path: &Path, default_interval: f64) -> Result<PowerSeries> {
    parse_power(path, &read_text(path)?, default_interval)
}

fn write_matrix_block(w: &mut dyn Write, tag: &str, m: &Matrix) -> io::Result<()> {
    writeln!(w, "#{tag} {} {}", m.rows(), m.cols())?;
    for r in 0..m.rows() {
        write_row(w, m.row(r))?;
    }
    Ok(())
}

pub fn write_model(w: &mut dyn Write, model: &FactorModel) -> io::Result<()> {
    write_matrix_block(w, "signatures", &model.signatures)?;
    write_matrix_block(w, "activations", &model.activations)
}

pub fn parse_model(path: &Path, text: &str) -> Result<FactorModel> {
    let mut it = lines(text).peekable();
    let mut block = |tag: &str| -> Result<Matrix> {
        let (line, header) = it
            .next()
            .ok_or_else(|| CliError::parse(path, 1, format!("missing #{tag} block")))?;
        let rest = header
            .strip_prefix('#')
            .and_then(|h| h.strip_prefix(tag))
            .ok_or_else(|| CliError::parse(path, line, format!("expected `#{tag} ROWS COLS`")))?;
        let dims: Vec<&str> = rest.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(CliError::parse(path, line, format!("expected `#{tag} ROWS COLS`")));
        }
        let (rows, cols) = (parse_usize(path, line, dims[0])?, parse_usize(path, line, dims[1])?);
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let (line, text) = it
                .next()
                .ok_or_else(|| CliError::parse(path, line, format!("#{tag} block has fewer than {rows} rows")))?;
            for (c, v) in parse_values(path, line, text, cols, |c| (r, c))?.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        Ok(m)
    };
    let signatures = block("signatures")?;
    let activations = block("activations")?;
    Ok(FactorModel::new(signatures, activations)?)
}

pub fn read_model(path: &Path) -> Result<FactorModel> {
    parse_model(path, &read_text(path)?)
}

const TRANSITION_HEADER: &str =
    "tau,p_off_given_off,p_off_given_on,p_on_given_off,p_on_given_on,smoothed_given_off,smoothed_given_on";

pub fn write_transitions(w: &mut dyn Write, table: &TransitionTable) -> io::Result<()> {
    writeln!(w, "{TRANSITION_HEADER}")?;
    for tau in 0..table.subsets() {
        let g = table.gamma(tau);
        let s = table.smoothed(tau);
        writeln!(
            w,
            "{tau},{},{},{},{},{},{}",
            fmt_num(g[0][0]),
            fmt_num(g[0][1]),
            fmt_num(g[1][0]),
            fmt_num(g[1][1]),
            s[0] as u8,
            s[1] as u8
        )?;
    }
    Ok(())
}

/// Reads a transition table. The switch-on probabilities are taken as
/// written and the off probabilities are their complements, so columns sum
/// to one exactly after the 9-digit round trip.
pub fn parse_transitions(path: &Path, text: &str) -> Result<TransitionTable> {
    let mut gamma = Vec::new();
    let mut smoothed = Vec::new();
    for (line, text) in lines(text) {
        if text.starts_with("tau") {
            continue;
        }
        let v = parse_values(path, line, text, 7, |c| (gamma.len(), c))?;
        if v[0] != gamma.len() as f64 {
            return Err(CliError::parse(path, line, format!("expected tau = {}", gamma.len())));
        }
        for j in 0..2 {
            if ((v[1 + j] + v[3 + j]) - 1.0).abs() > 1e-6 {
                return Err(CliError::parse(path, line, "transition probabilities do not sum to one"));
            }
        }
        gamma.push([[1.0 - v[3], 1.0 - v[4]], [v[3], v[4]]]);
        smoothed.push([v[5] != 0.0, v[6] != 0.0]);
    }
    if gamma.is_empty() {
        return Err(CliError::parse(path, 1, "no rows"));
    }
    Ok(TransitionTable::with_smoothed(gamma, smoothed)?)
}

pub fn read_transitions(path: &Path) -> Result<TransitionTable> {
    parse_transitions(path, &read_text(path)?)
}

pub fn partition_for_subsets(subsets: usize) -> Option<TimePartition> {
    [
        TimePartition::Single,
        TimePartition::Hourly,
        TimePartition::HalfMinuteDayType(DayCalendar::default()),
    ]
    .into_iter()
    .find(|p| p.subsets() == subsets)
}

pub fn write_template(w: &mut dyn Write, template: &ActivationTemplate, counts: Option<&[usize]>) -> io::Result<()> {
    match counts {
        Some(_) => writeln!(w, "tau,watts,count")?,
        None => writeln!(w, "tau,watts")?,
    }
    for (tau, &v) in template.values().iter().enumerate() {
        match counts {
            Some(c) => writeln!(w, "{tau},{},{}", fmt_num(v), c[tau])?,
            None => writeln!(w, "{tau},{}", fmt_num(v))?,
        }
    }
    Ok(())
}

/// Reads a template; the partition follows from the number of rows (1, 24
/// or 5760, the last with the default calendar).
pub fn parse_template(path: &Path, text: &str) -> Result<ActivationTemplate> {
    let mut values = Vec::new();
    let mut width = None;
    for (line, text) in lines(text) {
        if text.starts_with("tau") {
            width = Some(text.split(',').count());
            continue;
        }
        let cols = *width.get_or_insert_with(|| text.split(',').count());
        let v = parse_values(path, line, text, cols, |c| (values.len(), c))?;
        if v[0] != values.len() as f64 {
            return Err(CliError::parse(path, line, format!("expected tau = {}", values.len())));
        }
        values.push(v[1]);
    }
    let partition = partition_for_subsets(values.len()).ok_or_else(|| {
        CliError::parse(path, 1, format!("{} rows match no partition (1, 24 or 5760)", values.len()))
    })?;
    Ok(ActivationTemplate::new(partition, values)?)
}

pub fn read_template(path: &Path) -> Result<ActivationTemplate> {
    parse_template(path, &read_text(path)?)
}

pub fn write_report(w: &mut dyn Write, report: &MetricReport) -> io::Result<()> {
    let mut header = vec![
        "base_interval_s".to_string(),
        "kurtosis".into(),
        "entropy_nats".into(),
        "laplace_scale".into(),
    ];
    let mut row = vec![
        fmt_num(report.base_interval),
        fmt_num(report.kurtosis),
        fmt_num(report.entropy),
        fmt_num(report.laplace_scale),
    ];
    for acf in &report.acf_1day {
        header.push(format!("acf_1day_{}s", fmt_num(acf.interval)));
        row.push(acf.value.map(fmt_num).unwrap_or_default());
    }
    if let Some(thd) = &report.thd {
        header.extend(
            ["thd_mean_pct", "thd_median_pct", "thd_min_pct", "thd_max_pct", "thd_defined_periods", "thd_total_periods"]
                .map(String::from),
        );
        row.extend([
            fmt_num(thd.mean),
            fmt_num(thd.median),
            fmt_num(thd.min),
            fmt_num(thd.max),
            thd.defined_periods.to_string(),
            thd.total_periods.to_string(),
        ]);
    }
    writeln!(w, "{}", header.join(","))?;
    writeln!(w, "{}", row.join(","))
}

/// Per-period THD for plotting; undefined periods are left empty.
pub fn write_thd(w: &mut dyn Write, start: f64, cadence: f64, thd: &[Option<f64>]) -> io::Result<()> {
    writeln!(w, "timestamp,thd_pct")?;
    for (t, v) in thd.iter().enumerate() {
        writeln!(w, "{},{}", fmt_time(start + t as f64 * cadence), v.map(fmt_num).unwrap_or_default())?;
    }
    Ok(())
}

/// `timestamp,<col>...` table.
pub fn write_columns(w: &mut dyn Write, start: f64, cadence: f64, names: &[String], columns: &[Vec<f64>]) -> io::Result<()> {
    writeln!(w, "timestamp,{}", names.join(","))?;
    let len = columns.first().map_or(0, Vec::len);
    for t in 0..len {
        write!(w, "{}", fmt_time(start + t as f64 * cadence))?;
        for c in columns {
            write!(w, ",{}", fmt_num(c[t]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}
