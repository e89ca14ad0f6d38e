use std::fmt::Write;

/// EER (percent) per condition row and system column.
#[derive(Debug, Clone, PartialEq)]
pub struct EerTable {
    pub conditions: Vec<String>,
    pub systems: Vec<String>,
    /// `values[row][col]`
    pub values: Vec<Vec<Option<f64>>>,
}

impl EerTable {
    pub fn new(conditions: Vec<String>, systems: Vec<String>) -> Self {
        let values = vec![vec![None; systems.len()]; conditions.len()];
        Self {
            conditions,
            systems,
            values,
        }
    }

    pub fn set(&mut self, condition: &str, system: &str, eer: f64) {
        let r = self.conditions.iter().position(|c| c == condition);
        let c = self.systems.iter().position(|s| s == system);
        if let (Some(r), Some(c)) = (r, c) {
            self.values[r][c] = Some(eer);
        }
    }

    pub fn get(&self, condition: &str, system: &str) -> Option<f64> {
        let r = self.conditions.iter().position(|c| c == condition)?;
        let c = self.systems.iter().position(|s| s == system)?;
        self.values[r][c]
    }

    /// Fixed-width table, EERs to three decimals.
    pub fn render(&self) -> String {
        let first = self.conditions.iter().map(String::len).chain([9]).max().unwrap_or(9);
        let widths: Vec<usize> = self.systems.iter().map(|s| s.len().max(8)).collect();
        let mut out = String::new();
        write!(out, "{:<first$}", "condition").unwrap();
        for (s, w) in self.systems.iter().zip(&widths) {
            write!(out, "  {s:>w$}").unwrap();
        }
        out.push('\n');
        for (cond, row) in self.conditions.iter().zip(&self.values) {
            write!(out, "{cond:<first$}").unwrap();
            for (v, w) in row.iter().zip(&widths) {
                match v {
                    Some(v) => write!(out, "  {v:>w$.3}").unwrap(),
                    None => write!(out, "  {:>w$}", "-").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_aligned() {
        let mut t = EerTable::new(vec!["clean".into(), "rev-noi-0-7".into()], vec!["baseline".into()]);
        t.set("clean", "baseline", 2.0625);
        assert_eq!(t.get("clean", "baseline"), Some(2.0625));
        assert_eq!(
            t.render(),
            "condition    baseline\nclean           2.062\nrev-noi-0-7         -\n"
        );
    }
}
