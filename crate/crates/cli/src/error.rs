use thiserror::Error;

use crate::config::ConfigErrors;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(ConfigErrors),
    #[error("numerical failure: {0}")]
    Numerical(slitlab_core::Error),
    #[error("acceptance check failed: {}", .0.join("; "))]
    Check(Vec<String>),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Validation(e)
    }
}

/// Parameter problems surfacing inside the core count as validation errors.
impl From<slitlab_core::Error> for CliError {
    fn from(e: slitlab_core::Error) -> Self {
        use slitlab_core::Error as E;
        match e {
            E::Config(_) | E::Usage(_) | E::UnderResolved { .. } | E::Resolution { .. } => {
                CliError::Validation(ConfigErrors(vec![e.to_string()]))
            }
            E::Io(err) => CliError::Io(err.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use slitlab_core::Error as E;

    #[test]
    fn exit_codes() {
        let numerical = CliError::from(E::Numerical {
            step: 3,
            reason: "nan".into(),
        });
        assert_eq!(numerical.exit_code(), 3);
        assert_eq!(CliError::from(E::Singular("t = 0".into())).exit_code(), 3);
        assert_eq!(CliError::from(E::Usage("dt".into())).exit_code(), 2);
        assert_eq!(
            CliError::from(E::UnderResolved {
                what: "δ".into(),
                required_n: 64
            })
            .exit_code(),
            2
        );
        assert_eq!(CliError::from(E::Io("disk".into())).exit_code(), 1);
        assert_eq!(CliError::Check(vec!["x".into()]).exit_code(), 4);
    }
}
