//! Naming conventions for the subsystems shared by processes and party maps.
//!
//! Playing parties are numbered from 0 and named `A`, `B`, `C`, ... .
//! Party `i` receives its input on `I_<name>` and emits on `O_<name>`.

use crate::tensor::SubsystemLabel;

pub const PAST_CONTROL: &str = "P_c";
pub const PAST_TARGET: &str = "P_t";
pub const FUTURE_CONTROL: &str = "F_c";
pub const FUTURE_TARGET: &str = "F_t";

/// Parties are lettered, so at most 26 of them.
pub const MAX_PARTIES: usize = 26;

pub fn party_name(party: usize) -> String {
    assert!(party < MAX_PARTIES, "party index {party} out of range");
    char::from(b'A' + party as u8).to_string()
}

pub fn party_input(party: usize) -> SubsystemLabel {
    SubsystemLabel::qubit(format!("I_{}", party_name(party)))
}

pub fn party_output(party: usize) -> SubsystemLabel {
    SubsystemLabel::qubit(format!("O_{}", party_name(party)))
}

pub fn past_dummy(party: usize) -> SubsystemLabel {
    SubsystemLabel::qubit(format!("P_D{party}"))
}

pub fn future_dummy(party: usize) -> SubsystemLabel {
    SubsystemLabel::qubit(format!("F_D{party}"))
}

/// Cyclic successor `i⁺ = i + 1 mod k`.
pub fn successor(party: usize, k: usize) -> usize {
    (party + 1) % k
}

/// Cyclic predecessor `i⁻ = i - 1 mod k`.
pub fn predecessor(party: usize, k: usize) -> usize {
    (party + k - 1) % k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_neighbours() {
        assert_eq!(party_name(0), "A");
        assert_eq!(party_input(2).name(), "I_C");
        assert_eq!(party_output(1).name(), "O_B");
        assert_eq!(successor(2, 3), 0);
        assert_eq!(predecessor(0, 3), 2);
        assert_eq!(predecessor(1, 2), 0);
    }
}
