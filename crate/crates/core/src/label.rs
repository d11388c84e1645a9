//! Class-label taxonomy for HPC traces.
//!
//! Six concrete classes (benign plus five malware kinds) and the `Malware`
//! super-label used by the binary view.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Benign,
    Backdoor,
    Rootkit,
    Trojan,
    Virus,
    Worm,
    /// Super-label for every malware kind in the binary view.
    Malware,
}

impl ClassLabel {
    /// The six concrete classes in canonical order.
    pub const MULTICLASS: [ClassLabel; 6] = [
        ClassLabel::Benign,
        ClassLabel::Backdoor,
        ClassLabel::Rootkit,
        ClassLabel::Trojan,
        ClassLabel::Virus,
        ClassLabel::Worm,
    ];

    pub const BINARY: [ClassLabel; 2] = [ClassLabel::Benign, ClassLabel::Malware];

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Benign => "benign",
            ClassLabel::Backdoor => "backdoor",
            ClassLabel::Rootkit => "rootkit",
            ClassLabel::Trojan => "trojan",
            ClassLabel::Virus => "virus",
            ClassLabel::Worm => "worm",
            ClassLabel::Malware => "malware",
        }
    }

    pub fn is_malware(self) -> bool {
        self != ClassLabel::Benign
    }

    /// True for the five concrete malware kinds (not the super-label).
    pub fn is_malware_kind(self) -> bool {
        !matches!(self, ClassLabel::Benign | ClassLabel::Malware)
    }

    pub fn binary_view(self) -> ClassLabel {
        if self.is_malware() {
            ClassLabel::Malware
        } else {
            ClassLabel::Benign
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        ClassLabel::MULTICLASS
            .iter()
            .chain(std::iter::once(&ClassLabel::Malware))
            .copied()
            .find(|l| l.name() == lower)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}
