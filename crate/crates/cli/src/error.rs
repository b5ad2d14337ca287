use spectrum_auction::AuctionError;

/// Exit statuses of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    /// Unreadable, malformed or invalid input.
    pub const INPUT: i32 = 2;
    /// A checked bound or property does not hold.
    pub const VIOLATION: i32 = 3;
    /// The instance exceeds an exact solver's budget.
    pub const BUDGET: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}: line {line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error("{0}")]
    Violation(String),
}

fn is_budget(e: &AuctionError) -> bool {
    match e {
        AuctionError::TooLarge(_) => true,
        AuctionError::Slot { source, .. } => is_budget(source),
        _ => false,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Auction(e) if is_budget(e) => exit::BUDGET,
            CliError::Violation(_) => exit::VIOLATION,
            _ => exit::INPUT,
        }
    }
}
