//! Compact 3×3 matrix notation for command-line flags.

use ambient_attitude::so3::{from_row_major, Mat3, Vec3};

/// Parses `identity`, `I`, `<s>I` (e.g. `4I`), `diag(a,b,c)`, or nine
/// row-major numbers separated by commas or whitespace.
pub fn parse_matrix(text: &str) -> Result<Mat3, String> {
    let s = text.trim();
    let number = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("`{t}` is not a number in `{text}`"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{t}` is not finite in `{text}`"))
        }
    };
    if s.eq_ignore_ascii_case("identity") || s == "I" {
        return Ok(Mat3::identity());
    }
    if let Some(scale) = s.strip_suffix('I') {
        return Ok(Mat3::identity() * number(scale)?);
    }
    if let Some(inner) = s.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let d: Vec<f64> = inner.split(',').map(number).collect::<Result<_, _>>()?;
        if d.len() != 3 {
            return Err(format!("diag(...) takes 3 entries, got {} in `{text}`", d.len()));
        }
        return Ok(Mat3::from_diagonal(&Vec3::new(d[0], d[1], d[2])));
    }
    let entries: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(number)
        .collect::<Result<_, _>>()?;
    if entries.len() != 9 {
        return Err(format!("expected 9 matrix entries, got {} in `{text}`", entries.len()));
    }
    Ok(from_row_major(&entries))
}
