/// Column-major-named, row-major-stored numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Header line plus one line per row, 12 significant digits.
    pub fn body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|&x| fmt12(x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Inverse of [`Table::body`].
    pub fn parse_body(text: &str) -> Option<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let columns = lines.next()?.split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|c| c.parse().ok()).collect::<Option<Vec<f64>>>())
            .collect::<Option<_>>()?;
        Some(Table { columns, rows })
    }
}

/// `x` rounded to 12 significant digits, printed in its shortest form with a `.` decimal.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap();
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e9).contains(&a) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}
