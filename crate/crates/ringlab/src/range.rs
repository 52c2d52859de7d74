//! Parsing of sweep and list flags.

/// Relative tolerance for deciding that `stop` lies on the grid.
const ON_GRID_TOL: f64 = 1e-9;

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{}' is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{}' is not finite", s.trim()))
    }
}

/// `start:stop:step`, or a single value.
///
/// Points are `start + k * step`. `stop` is included when it falls on the
/// grid to within `1e-9` of a step count, and is then emitted exactly.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let (start, stop, step) = match parts.as_slice() {
        [v] => return Ok(vec![number(v)?]),
        [a, b, c] => (number(a)?, number(b)?, number(c)?),
        _ => return Err(format!("'{s}' is not start:stop:step")),
    };
    if !(step > 0.0) {
        return Err(format!("step in '{s}' must be positive"));
    }
    if stop < start {
        return Err(format!("stop is below start in '{s}'"));
    }
    let steps = (stop - start) / step;
    let nearest = steps.round();
    let on_grid = (steps - nearest).abs() <= ON_GRID_TOL * nearest.max(1.0);
    let last = if on_grid { nearest } else { steps.floor() };
    if last > 1e8 {
        return Err(format!("'{s}' has more than 1e8 points"));
    }
    let n = last as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| start + k as f64 * step).collect();
    if on_grid {
        grid[n] = stop;
    }
    Ok(grid)
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let v = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

/// Half-open sample index range `start:end`.
pub fn parse_index_range(s: &str) -> Result<std::ops::Range<usize>, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("'{s}' is not start:end"))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{}' is not a sample index", x.trim()))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if b <= a {
        return Err(format!("empty index range '{s}'"));
    }
    Ok(a..b)
}
