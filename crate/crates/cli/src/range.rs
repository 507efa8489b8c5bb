use std::f64::consts::PI;
use std::str::FromStr;

/// A closed interval written `lo:hi`. Either end may be a plain number or a
/// multiple of pi such as `pi`, `-pi`, `2pi` or `0.5pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

fn parse_end(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.strip_suffix("pi") {
        Some("") => PI,
        Some("-") => -PI,
        Some(factor) => {
            factor
                .parse::<f64>()
                .map_err(|e| format!("bad multiple of pi '{s}': {e}"))?
                * PI
        }
        None => s.parse::<f64>().map_err(|e| format!("bad number '{s}': {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
        let range = Range {
            lo: parse_end(lo)?,
            hi: parse_end(hi)?,
        };
        if range.lo > range.hi {
            return Err(format!("empty range {s}"));
        }
        Ok(range)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_numbers_and_multiples_of_pi() {
        assert_eq!("-10:10".parse::<Range>().unwrap(), Range { lo: -10.0, hi: 10.0 });
        assert_eq!("0:2pi".parse::<Range>().unwrap(), Range { lo: 0.0, hi: 2.0 * PI });
        assert_eq!("-pi:pi".parse::<Range>().unwrap(), Range { lo: -PI, hi: PI });
        assert_eq!("0.5pi:1e1".parse::<Range>().unwrap(), Range { lo: 0.5 * PI, hi: 10.0 });
    }

    #[test]
    fn rejects_malformed_ranges() {
        for bad in ["10", "a:b", "3:1", "0:inf", "1:2:3"] {
            assert!(bad.parse::<Range>().is_err(), "{bad}");
        }
    }
}
