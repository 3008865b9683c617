//! Line-oriented text formats for series and ODE files.
//!
//! Both formats are plain decimal and round-trip byte-exactly:
//! parse(render(x)) == x and render(parse(s)) == s for files this tool
//! writes.

use std::fmt::Write as _;

use polyseries_core::error::Error;
use polyseries_core::exactarith::{
    digits_to_prec, IntegerSeries, PrimeModulus, RealSeries, ResidueSeries,
};
use polyseries_core::odefit::LinearODE;
use polyseries_core::Result;
use rug::{Float, Integer};

/// Payload of a series file: exact integers, residues mod one prime, or
/// reals at a stated decimal precision.
#[derive(Clone, Debug)]
pub enum SeriesData {
    Exact(IntegerSeries),
    Modular(ResidueSeries),
    Real(RealSeries),
}

/// A coefficient series with its kind tag: t (polygon counts), c
/// (staircase), p (imperfect), r (normalized reals).
#[derive(Clone, Debug)]
pub struct SeriesFile {
    pub kind: char,
    pub data: SeriesData,
}

impl SeriesFile {
    pub fn exact(kind: char, series: IntegerSeries) -> Self {
        SeriesFile {
            kind,
            data: SeriesData::Exact(series),
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            SeriesData::Exact(s) => s.len(),
            SeriesData::Modular(s) => s.coeffs.len(),
            SeriesData::Real(s) => s.coeffs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_exact(&self) -> Result<&IntegerSeries> {
        match &self.data {
            SeriesData::Exact(s) => Ok(s),
            _ => Err(Error::InvalidArgument(
                "exact-kind series file required".into(),
            )),
        }
    }
}

pub fn render_series(file: &SeriesFile) -> String {
    let mut out = String::new();
    match &file.data {
        SeriesData::Exact(s) => {
            let _ = writeln!(out, "series 1 {} exact", file.kind);
            for (n, v) in s.coeffs.iter().enumerate() {
                let _ = writeln!(out, "{n} {v}");
            }
        }
        SeriesData::Modular(s) => {
            let _ = writeln!(out, "series 1 {} mod {}", file.kind, s.modulus.value());
            for (n, v) in s.coeffs.iter().enumerate() {
                let _ = writeln!(out, "{n} {v}");
            }
        }
        SeriesData::Real(s) => {
            let _ = writeln!(out, "series 1 {} digits {}", file.kind, s.digits);
            for (n, v) in s.coeffs.iter().enumerate() {
                let _ = writeln!(out, "{n} {}", v.to_string_radix(10, Some(s.digits as usize)));
            }
        }
    }
    out
}

pub fn parse_series(text: &str) -> Result<SeriesFile> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty series file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 4 || tokens[0] != "series" || tokens[1] != "1" {
        return Err(Error::Parse(format!("bad series header: {header}")));
    }
    let kind = tokens[2]
        .chars()
        .next()
        .filter(|_| tokens[2].len() == 1 && "tcpr".contains(tokens[2]))
        .ok_or_else(|| Error::Parse(format!("bad series kind: {}", tokens[2])))?;
    let mut expect = 0usize;
    let parse_n = |tok: &str, expect: usize| -> Result<()> {
        let n: usize = tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad index: {tok}")))?;
        if n != expect {
            return Err(Error::Parse(format!("index {n} out of order")));
        }
        Ok(())
    };
    let data = match (tokens[3], tokens.get(4)) {
        ("exact", None) => {
            let mut coeffs = Vec::new();
            for line in lines {
                let (n_tok, v_tok) = split_pair(line)?;
                parse_n(n_tok, expect)?;
                expect += 1;
                coeffs.push(
                    Integer::parse(v_tok)
                        .map(Integer::from)
                        .map_err(|_| Error::Parse(format!("bad integer: {v_tok}")))?,
                );
            }
            SeriesData::Exact(IntegerSeries::new(coeffs))
        }
        ("mod", Some(p_tok)) => {
            let p: u64 = p_tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad modulus: {p_tok}")))?;
            let modulus = PrimeModulus::new(p)?;
            let mut coeffs = Vec::new();
            for line in lines {
                let (n_tok, v_tok) = split_pair(line)?;
                parse_n(n_tok, expect)?;
                expect += 1;
                coeffs.push(
                    v_tok
                        .parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad residue: {v_tok}")))?,
                );
            }
            SeriesData::Modular(ResidueSeries { modulus, coeffs })
        }
        ("digits", Some(d_tok)) => {
            let digits: u32 = d_tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad digit count: {d_tok}")))?;
            let prec = digits_to_prec(digits);
            let mut coeffs = Vec::new();
            for line in lines {
                let (n_tok, v_tok) = split_pair(line)?;
                parse_n(n_tok, expect)?;
                expect += 1;
                let incomplete = Float::parse(v_tok)
                    .map_err(|_| Error::Parse(format!("bad real: {v_tok}")))?;
                coeffs.push(Float::with_val(prec, incomplete));
            }
            SeriesData::Real(RealSeries { digits, coeffs })
        }
        _ => return Err(Error::Parse(format!("bad series header: {header}"))),
    };
    Ok(SeriesFile { kind, data })
}

fn split_pair(line: &str) -> Result<(&str, &str)> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(Error::Parse(format!("bad series line: {line}"))),
    }
}

/// Render an ODE: "order m", then one line per coefficient polynomial,
/// constant term first.
pub fn render_ode(ode: &LinearODE) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "order {}", ode.order());
    for (k, p) in ode.polys().iter().enumerate() {
        let deg = polyseries_core::poly::deg(p).unwrap_or(0);
        let _ = write!(out, "P {k} {deg}");
        if p.is_empty() {
            let _ = write!(out, " 0");
        } else {
            for c in &p[..=deg] {
                let _ = write!(out, " {c}");
            }
        }
        let _ = writeln!(out);
    }
    out
}

pub fn parse_ode(text: &str) -> Result<LinearODE> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty ODE file".into()))?;
    let order: usize = header
        .strip_prefix("order ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad ODE header: {header}")))?;
    let mut polys = vec![Vec::new(); order + 1];
    let mut seen = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        if it.next() != Some("P") {
            return Err(Error::Parse(format!("bad ODE line: {line}")));
        }
        let k: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad ODE line: {line}")))?;
        let deg: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad ODE line: {line}")))?;
        if k > order || seen != k {
            return Err(Error::Parse(format!("unexpected P index {k}")));
        }
        let coeffs: Vec<Integer> = it
            .map(|tok| {
                Integer::parse(tok)
                    .map(Integer::from)
                    .map_err(|_| Error::Parse(format!("bad integer: {tok}")))
            })
            .collect::<Result<_>>()?;
        if coeffs.len() != deg + 1 {
            return Err(Error::Parse(format!(
                "P {k} declares degree {deg} but carries {} coefficients",
                coeffs.len()
            )));
        }
        polys[k] = coeffs;
        seen += 1;
    }
    if seen != order + 1 {
        return Err(Error::Parse(format!(
            "expected {} polynomial lines, found {seen}",
            order + 1
        )));
    }
    LinearODE::new(polys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use polyseries_core::enumerate::{brute_force_t, enumerate_imperfect};
    use polyseries_core::poly::from_i64s;

    #[test]
    fn exact_series_roundtrip() {
        let t = brute_force_t(7).unwrap();
        let file = SeriesFile::exact('t', t);
        let text = render_series(&file);
        assert!(text.starts_with("series 1 t exact\n0 0\n1 0\n2 4\n"));
        let back = parse_series(&text).unwrap();
        assert_eq!(render_series(&back), text);
        assert_eq!(back.as_exact().unwrap().coeffs, file.as_exact().unwrap().coeffs);
    }

    #[test]
    fn modular_series_roundtrip() {
        let p = PrimeModulus::new((1 << 31) - 1).unwrap();
        let s = enumerate_imperfect(12, p).unwrap();
        let file = SeriesFile {
            kind: 'p',
            data: SeriesData::Modular(s),
        };
        let text = render_series(&file);
        assert!(text.starts_with("series 1 p mod 2147483647\n"));
        let back = parse_series(&text).unwrap();
        assert_eq!(render_series(&back), text);
    }

    #[test]
    fn real_series_roundtrip_is_stable() {
        let digits = 40;
        let prec = digits_to_prec(digits);
        let coeffs = vec![
            Float::with_val(prec, 2.625),
            Float::with_val(prec, -0.001953125),
            Float::with_val(prec, 123456789u64),
        ];
        let file = SeriesFile {
            kind: 'r',
            data: SeriesData::Real(RealSeries { digits, coeffs }),
        };
        let once = render_series(&file);
        let twice = render_series(&parse_series(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn series_rejects_malformed_input() {
        assert!(parse_series("").is_err());
        assert!(parse_series("series 2 t exact\n").is_err());
        assert!(parse_series("series 1 q exact\n").is_err());
        assert!(parse_series("series 1 t exact\n1 4\n").is_err());
        assert!(parse_series("series 1 t exact\n0 4\n0 5\n").is_err());
        assert!(parse_series("series 1 p mod 10\n").is_err());
    }

    #[test]
    fn ode_roundtrip() {
        let ode = LinearODE::new(vec![
            from_i64s(&[-2]),
            from_i64s(&[-1, 2]),
            from_i64s(&[0, 1, -4]),
        ])
        .unwrap();
        let text = render_ode(&ode);
        assert_eq!(text, "order 2\nP 0 0 2\nP 1 1 1 -2\nP 2 2 0 -1 4\n");
        let back = parse_ode(&text).unwrap();
        assert!(back.equivalent(&ode));
        assert_eq!(render_ode(&back), text);
    }

    #[test]
    fn ode_rejects_malformed_input() {
        assert!(parse_ode("order x\n").is_err());
        assert!(parse_ode("order 1\nP 0 0 1\n").is_err());
        assert!(parse_ode("order 1\nP 0 1 1\nP 1 0 1\n").is_err());
        assert!(parse_ode("order 0\nP 0 0 0\n").is_err());
    }
}
