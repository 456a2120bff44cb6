use std::env;
use std::io::{self, Write};

use serde_json::Value;

/// Exit statuses: 0 success or related, 1 negative analysis result, 2 usage
/// or IO error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Positive,
    Negative,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Positive => 0,
            Status::Negative => 1,
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Positive
        } else {
            Status::Negative
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn analysis(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn render(&self) -> String {
        if self.code == 2 {
            format!("sessionflow: {}", self.message)
        } else {
            self.message.clone()
        }
    }
}

fn color_enabled() -> bool {
    env::var("SESSIONFLOW_COLOR").is_ok_and(|v| v == "1")
}

/// A verdict word, green or red when colour is on.
pub fn verdict(word: &str, good: bool) -> String {
    if color_enabled() {
        let code = if good { 32 } else { 31 };
        format!("\x1b[{code}m{word}\x1b[0m")
    } else {
        word.to_string()
    }
}

/// A finished report: either printed as lines or as one JSON document.
pub struct Report {
    pub text: Vec<String>,
    pub json: Value,
    pub status: Status,
}

impl Report {
    pub fn emit(self, json: bool) -> Status {
        let mut out = io::stdout().lock();
        let _ = if json {
            writeln!(out, "{}", serde_json::to_string_pretty(&self.json).expect("report serializes"))
        } else {
            self.text.iter().try_for_each(|l| writeln!(out, "{l}"))
        };
        self.status
    }
}
