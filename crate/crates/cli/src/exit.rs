//! Maps failures to process exit codes.

use std::fmt;

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const NUMERIC: u8 = 3;

/// A bad flag, missing argument or inconsistent configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Exit code for the first classifiable error in the chain.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<eeg_inception::Error>() {
            return if e.is_numeric() {
                NUMERIC
            } else if e.is_data() || matches!(e, eeg_inception::Error::Shape { .. }) {
                DATA
            } else {
                USAGE
            };
        }
        if cause.is::<UsageError>() || cause.is::<toml::de::Error>() {
            return USAGE;
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return DATA;
        }
    }
    USAGE
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn engine_errors_are_classified_through_context() {
        let numeric: anyhow::Result<()> = Err(eeg_inception::Error::Diverged { epoch: 1, batch: 2, loss: f64::NAN }.into());
        assert_eq!(code_for(&numeric.context("training").unwrap_err()), NUMERIC);
        let data = anyhow::Error::from(eeg_inception::Error::InvalidData("x".into())).context("reading");
        assert_eq!(code_for(&data), DATA);
        let config = anyhow::Error::from(eeg_inception::Error::InvalidConfig("x".into()));
        assert_eq!(code_for(&config), USAGE);
        assert_eq!(code_for(&usage("--depth")), USAGE);
        let io = anyhow::Error::from(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        assert_eq!(code_for(&io), DATA);
    }
}
