//! Plain-text number formatting shared by the CSV writers.

/// Scientific notation with 15 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.14e}")
}

/// Joins already formatted fields with commas and a trailing newline.
pub fn row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(f.as_ref());
    }
    line.push('\n');
    line
}
