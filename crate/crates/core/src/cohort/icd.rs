//! ICD-9 CM code parsing and the heart-failure code table.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A parsed diagnosis code. `V` and `E` supplementary codes parse but never
/// match a numeric pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IcdCode {
    pub category: Category,
    pub decimal: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Numeric(u16),
    Supplementary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedCode(pub String);

impl fmt::Display for MalformedCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed ICD-9 code {:?}", self.0)
    }
}

impl IcdCode {
    /// Accepts `428`, `428.0`, `428.22`, and the undotted form `42822`.
    pub fn parse(raw: &str) -> Result<Self, MalformedCode> {
        let code = raw.trim();
        let bad = || MalformedCode(raw.to_string());
        let (head, decimal) = match code.split_once('.') {
            Some((h, d)) => (h, d),
            None if code.len() > 3 && code.as_bytes()[0].is_ascii_digit() => code.split_at(3),
            None => (code, ""),
        };
        if !decimal.bytes().all(|b| b.is_ascii_digit()) || decimal.len() > 2 {
            return Err(bad());
        }
        let category = match head.as_bytes().first() {
            Some(b'V' | b'v' | b'E' | b'e')
                if head.len() > 1 && head[1..].bytes().all(|b| b.is_ascii_digit()) =>
            {
                Category::Supplementary
            }
            Some(b) if b.is_ascii_digit() && head.len() <= 3 => {
                Category::Numeric(head.parse().map_err(|_| bad())?)
            }
            _ => return Err(bad()),
        };
        Ok(IcdCode {
            category,
            decimal: decimal.to_string(),
        })
    }
}

/// A code-table entry: `402.01` matches exactly, `428.XX` matches any code
/// whose integer part is 428.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IcdPattern {
    category: u16,
    /// `None` for a wildcard decimal part.
    decimal: Option<String>,
}

impl IcdPattern {
    pub fn parse(text: &str) -> Result<Self, MalformedCode> {
        let bad = || MalformedCode(text.to_string());
        let (head, tail) = text.trim().split_once('.').unwrap_or((text.trim(), "XX"));
        let category = head.parse().map_err(|_| bad())?;
        let decimal = if tail.eq_ignore_ascii_case("xx") {
            None
        } else if tail.bytes().all(|b| b.is_ascii_digit()) && tail.len() <= 2 {
            Some(tail.to_string())
        } else {
            return Err(bad());
        };
        Ok(IcdPattern { category, decimal })
    }

    pub fn matches(&self, code: &IcdCode) -> bool {
        match code.category {
            Category::Numeric(c) if c == self.category => {
                self.decimal.as_ref().is_none_or(|d| *d == code.decimal)
            }
            _ => false,
        }
    }
}

impl TryFrom<String> for IcdPattern {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        IcdPattern::parse(&s).map_err(|e| e.to_string())
    }
}

impl From<IcdPattern> for String {
    fn from(p: IcdPattern) -> String {
        p.to_string()
    }
}

impl fmt::Display for IcdPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03}.{}", self.category, self.decimal.as_deref().unwrap_or("XX"))
    }
}

/// Hypertensive heart (and kidney) disease with heart failure, plus every
/// 428 heart-failure code.
pub const CHF_CODES: [&str; 10] = [
    "402.01", "402.11", "402.91", "404.01", "404.03", "404.11", "404.13", "404.91", "404.93",
    "428.XX",
];

pub fn chf_code_table() -> Vec<IcdPattern> {
    CHF_CODES
        .iter()
        .map(|c| IcdPattern::parse(c).expect("built-in pattern"))
        .collect()
}

/// True when any diagnosis, primary or secondary, matches the table.
/// Every code is validated, so a malformed secondary code is reported even
/// if an earlier code already matched.
pub fn matches_any<S: AsRef<str>>(
    codes: &[S],
    table: &[IcdPattern],
) -> Result<bool, MalformedCode> {
    let mut hit = false;
    for raw in codes {
        let code = IcdCode::parse(raw.as_ref())?;
        hit |= table.iter().any(|p| p.matches(&code));
    }
    Ok(hit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_entries() {
        let table = chf_code_table();
        assert_eq!(table.len(), 10);
        assert!(matches_any(&["402.01"], &table).unwrap());
        assert!(matches_any(&["428.22", "250.00"], &table).unwrap());
        assert!(matches_any(&["250.00", "428"], &table).unwrap());
        assert!(matches_any(&["42822"], &table).unwrap());
        assert!(!matches_any(&["401.9"], &table).unwrap());
        assert!(!matches_any(&["402.00"], &table).unwrap());
        assert!(!matches_any(&["402.1"], &table).unwrap());
    }

    #[test]
    fn supplementary_codes_parse_but_never_match() {
        let table = chf_code_table();
        assert!(!matches_any(&["V45.81", "E878.1"], &table).unwrap());
    }

    #[test]
    fn malformed_codes_are_errors() {
        let table = chf_code_table();
        for bad in ["abc", "4x8.0", "428.a", "", "1234.5", "428.123"] {
            assert!(matches_any(&[bad], &table).is_err(), "{bad}");
        }
        // a later malformed code is still reported
        assert!(matches_any(&["428.0", "zz"], &table).is_err());
    }

    #[test]
    fn pattern_display_round_trip() {
        for c in CHF_CODES {
            assert_eq!(IcdPattern::parse(c).unwrap().to_string(), c);
        }
    }
}
