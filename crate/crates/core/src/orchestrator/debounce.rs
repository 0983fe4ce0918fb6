//! Keystroke debouncing and the right-of-cursor suppression rule.

pub const DEFAULT_DEBOUNCE_MS: u64 = 20;

/// Closing tokens that may sit right of the cursor without blocking a suggestion.
pub const ALLOWED_CLOSERS: [char; 3] = [')', '}', ']'];

/// Dispatch times for a keystroke trace: one dispatch `window_ms` after the
/// last keystroke of every burst, where a burst ends at a gap of at least
/// `window_ms`. `keystrokes` must be sorted.
pub fn debounce(keystrokes: &[u64], window_ms: u64) -> Vec<u64> {
    assert!(window_ms > 0, "debounce window must be positive");
    keystrokes
        .iter()
        .enumerate()
        .filter(|&(i, &t)| keystrokes.get(i + 1).is_none_or(|&next| next - t >= window_ms))
        .map(|(_, &t)| t + window_ms)
        .collect()
}

/// Whether a suggestion may be shown given the text between the cursor and
/// the end of its line. Trimmed of surrounding whitespace it must be empty
/// or made only of closing brackets.
pub fn suggestion_allowed(right_of_cursor: &str) -> bool {
    right_of_cursor
        .trim()
        .chars()
        .all(|c| ALLOWED_CLOSERS.contains(&c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burst_coalesces() {
        assert_eq!(debounce(&[0, 10, 20, 30], 20), vec![50]);
    }

    #[test]
    fn single_keystroke() {
        assert_eq!(debounce(&[0], 20), vec![20]);
    }

    #[test]
    fn separated_keystrokes() {
        assert_eq!(debounce(&[0, 100], 20), vec![20, 120]);
        assert_eq!(debounce(&[], 20), Vec::<u64>::new());
    }

    #[test]
    fn gap_equal_to_window_splits() {
        assert_eq!(debounce(&[0, 20], 20), vec![20, 40]);
        assert_eq!(debounce(&[0, 19], 20), vec![39]);
    }

    #[test]
    fn suppression() {
        assert!(!suggestion_allowed("foo"));
        assert!(!suggestion_allowed(" x)"));
        assert!(suggestion_allowed(")"));
        assert!(suggestion_allowed("  )]}  "));
        assert!(!suggestion_allowed(") ]"));
        assert!(suggestion_allowed(""));
        assert!(suggestion_allowed("   "));
        assert!(!suggestion_allowed(");"));
    }
}
