//! Loading inputs and mapping library errors onto exit codes.

use std::fs;
use std::path::Path;

use resolvix::family::{builtin_family, parse_family, FamilyError, SetFamily};
use resolvix::forcing::{parse_condition, parse_fragment, parse_schedule, twin_schedule, CandidateFragment, Condition, DenseSpec, ForcingError};
use resolvix::ipart::IpartError;
use resolvix::order::{builtin, parse_poset, OrderError};
use resolvix::partition::{parse_partition, Partition};
use resolvix::Order;

pub enum Failure {
    /// Unreadable or malformed input: exit 1.
    Input(String),
    /// Input parsed but the operation's precondition fails: exit 2.
    Precondition(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Precondition(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Precondition(m) => m,
        }
    }
}

pub fn pre(msg: impl ToString) -> Failure {
    Failure::Precondition(msg.to_string())
}

impl From<FamilyError> for Failure {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Parse(_) => Failure::Input(e.to_string()),
            _ => pre(e),
        }
    }
}

impl From<OrderError> for Failure {
    fn from(e: OrderError) -> Self {
        match e {
            OrderError::Parse(_) => Failure::Input(e.to_string()),
            _ => pre(e),
        }
    }
}

impl From<IpartError> for Failure {
    fn from(e: IpartError) -> Self {
        match e {
            IpartError::Order(o) => o.into(),
            _ => pre(e),
        }
    }
}

impl From<ForcingError> for Failure {
    fn from(e: ForcingError) -> Self {
        match e {
            ForcingError::Parse(_) => Failure::Input(e.to_string()),
            _ => pre(e),
        }
    }
}

pub fn read(path: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

pub fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn is_file(path: &str) -> bool {
    Path::new(path).is_file()
}

/// A poset file, or a builtin name when no such file exists.
pub fn order(arg: &str) -> Result<Box<dyn Order + Send + Sync>, Failure> {
    if is_file(arg) {
        return Ok(Box::new(parse_poset(&read(arg)?)?));
    }
    builtin(arg).map_err(|e| Failure::Input(format!("{arg}: no such file, and {e}")))
}

/// A family file, or a builtin name when no such file exists.
pub fn family(arg: &str) -> Result<SetFamily, Failure> {
    if is_file(arg) {
        return Ok(parse_family(&read(arg)?)?);
    }
    builtin_family(arg).ok_or_else(|| Failure::Input(format!("{arg}: no such file or builtin family")))
}

pub fn partition(path: &str) -> Result<Partition, Failure> {
    parse_partition(&read(path)?).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

pub fn condition(path: &str) -> Result<Condition, Failure> {
    parse_condition(&read(path)?).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

pub fn fragment(path: &str) -> Result<CandidateFragment, Failure> {
    parse_fragment(&read(path)?).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

/// A schedule file, or `twin:<seed>` for the generated twin schedule.
pub fn schedule(arg: &str) -> Result<Vec<DenseSpec>, Failure> {
    if !is_file(arg) {
        if let Some(s) = arg.strip_prefix("twin:") {
            let seed = s.parse().map_err(|_| Failure::Input(format!("bad twin seed {s:?}")))?;
            return Ok(twin_schedule(seed));
        }
    }
    parse_schedule(&read(arg)?).map_err(|e| Failure::Input(format!("{arg}: {e}")))
}
