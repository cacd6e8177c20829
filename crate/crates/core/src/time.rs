//! Service-day clock times.
//!
//! Times are whole seconds since midnight of the service day. Values past
//! 24:00:00 are legal, following the transit feed convention for trips that
//! run over midnight.

use std::fmt;

/// Seconds since service-day midnight.
pub type Seconds = u32;

pub const SECONDS_PER_DAY: Seconds = 86_400;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeParseError(pub String);

impl fmt::Display for TimeParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed time `{}` (expected H:MM:SS)", self.0)
    }
}

impl std::error::Error for TimeParseError {}

/// Parses `H:MM:SS` / `HH:MM:SS`, allowing hours above 23.
pub fn parse_hms(text: &str) -> Result<Seconds, TimeParseError> {
    let err = || TimeParseError(text.to_string());
    let trimmed = text.trim();
    let mut parts = trimmed.split(':');
    let (h, m, s) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(h), Some(m), Some(s), None) => (h, m, s),
        _ => return Err(err()),
    };
    let field = |p: &str, max: Option<u32>| -> Result<u32, TimeParseError> {
        if p.is_empty() || p.len() > 3 || !p.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let v: u32 = p.parse().map_err(|_| err())?;
        match max {
            Some(max) if v > max => Err(err()),
            _ => Ok(v),
        }
    };
    if m.len() != 2 || s.len() != 2 {
        return Err(err());
    }
    let h = field(h, None)?;
    let m = field(m, Some(59))?;
    let s = field(s, Some(59))?;
    Ok(h * 3600 + m * 60 + s)
}

/// Formats as zero-padded `HH:MM:SS`; hours may exceed 23.
pub fn format_hms(t: Seconds) -> String {
    format!("{:02}:{:02}:{:02}", t / 3600, (t / 60) % 60, t % 60)
}
