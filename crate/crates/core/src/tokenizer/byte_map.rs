//! Reversible byte ↔ printable-character mapping used in `vocab.json` and
//! `merges.txt`. Printable Latin-1 bytes map to themselves; the remaining 68
//! bytes (controls, space, soft hyphen, ...) map to U+0100 onward, so a space
//! prints as `Ġ`.

use std::sync::OnceLock;

fn table() -> &'static ([char; 256], std::collections::HashMap<char, u8>) {
    static TABLE: OnceLock<([char; 256], std::collections::HashMap<char, u8>)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let printable = |b: u8| matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        let mut forward = ['\0'; 256];
        let mut extra = 0u32;
        for b in 0..=255u8 {
            forward[b as usize] = if printable(b) {
                char::from(b)
            } else {
                let c = char::from_u32(256 + extra).expect("valid code point");
                extra += 1;
                c
            };
        }
        let backward = forward
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect();
        (forward, backward)
    })
}

pub fn byte_to_char(b: u8) -> char {
    table().0[b as usize]
}

pub fn bytes_to_string(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| byte_to_char(b)).collect()
}

/// Inverse of [`bytes_to_string`]; `None` if a character is outside the map.
pub fn string_to_bytes(s: &str) -> Option<Vec<u8>> {
    let back = &table().1;
    s.chars().map(|c| back.get(&c).copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_is_a_bijection() {
        let all: Vec<u8> = (0..=255).collect();
        let s = bytes_to_string(&all);
        assert_eq!(s.chars().count(), 256);
        assert_eq!(string_to_bytes(&s).unwrap(), all);
        assert_eq!(byte_to_char(b' '), 'Ġ');
        assert_eq!(byte_to_char(b'a'), 'a');
        assert_eq!(byte_to_char(b'\n'), 'Ċ');
        assert_eq!(string_to_bytes("\u{4e00}"), None);
    }
}
