//! Value parsers shared by the subcommands and the sweep runner.

use num_complex::Complex64;

/// A non-negative integer, also accepting float notation such as `1e7`.
pub fn count(text: &str) -> Result<u64, String> {
    let t = text.trim().replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = t.parse().map_err(|_| format!("`{text}` is not a number"))?;
    // every integer-valued double below 2^64 converts exactly
    if !(x >= 0.0) || x.fract() != 0.0 || x >= 18_446_744_073_709_551_616.0 {
        return Err(format!("`{text}` is not a non-negative 64-bit integer"));
    }
    Ok(x as u64)
}

/// A complex number written as `a`, `bi`, `a+bi` or `a-bi`.
pub fn complex(text: &str) -> Result<Complex64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{text}` is not a complex number like 0.5+14.1i");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // the sign that starts the imaginary part: not leading, not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// Doubles at 17 significant digits, which round-trip exactly.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}
