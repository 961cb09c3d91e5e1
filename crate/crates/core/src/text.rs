//! Cell text tokenization and token normalization.
//!
//! Raw cell text is split on whitespace, punctuation is split off into
//! single-character tokens and letter/digit runs are separated, so `DN50`
//! becomes `DN`, `50`. A decimal separator between two digits stays inside
//! the number (`12.5` is one token). Case is preserved in tokens and folded
//! by [`normalize`] wherever tokens are compared or looked up.

use crate::table::Token;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Letter,
    Digit,
    Punct,
}

fn class_of(c: char) -> Class {
    if c.is_numeric() {
        Class::Digit
    } else if c.is_alphabetic() {
        Class::Letter
    } else {
        Class::Punct
    }
}

/// Splits raw cell text into tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut current = String::new();
        let mut current_class: Option<Class> = None;
        for (i, &c) in chars.iter().enumerate() {
            let mut class = class_of(c);
            if class == Class::Punct
                && (c == '.' || c == ',')
                && current_class == Some(Class::Digit)
                && chars.get(i + 1).is_some_and(|n| n.is_numeric())
            {
                class = Class::Digit;
            }
            let boundary = match current_class {
                None => false,
                Some(Class::Punct) => true,
                Some(prev) => prev != class,
            };
            if boundary && !current.is_empty() {
                out.push(Token::new_unchecked(std::mem::take(&mut current)));
            }
            current.push(c);
            current_class = Some(class);
        }
        if !current.is_empty() {
            out.push(Token::new_unchecked(current));
        }
    }
    out
}

/// Case-folded form used for vocabulary lookup and dictionary matching.
pub fn normalize(token: &str) -> String {
    token.to_lowercase()
}

/// Lowercases and collapses internal whitespace of a surface name.
pub fn normalize_surface(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn has_letter_and_digit(s: &str) -> bool {
    s.chars().any(char::is_alphabetic) && s.chars().any(char::is_numeric)
}
