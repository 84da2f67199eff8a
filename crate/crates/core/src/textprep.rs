//! Tweet cleaning and whitespace tokenization.
//!
//! [`clean`] applies a fixed rule sequence:
//!
//! 1. URLs (scheme, `www.` and bare `domain.tld/path` forms such as `t.co/...`)
//! 2. email addresses
//! 3. IPv4 addresses
//! 4. digits, standalone or embedded
//! 5. every character that is not an ASCII letter or whitespace, which
//!    drops `#`, `@`, punctuation and emoji while keeping the word they
//!    were attached to (`@USER` becomes `USER`, `I'm` becomes `Im`)
//! 6. lowercasing
//! 7. whitespace collapse and trim
//!
//! The address patterns must run before symbol stripping; once `.`, `/`
//! and `@` are gone they can no longer be recognized.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;

static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:[a-z][a-z0-9+.-]*://\S+|www\.\S+|\b(?:[a-z0-9-]+\.)+[a-z]{2,}/\S*)").expect("url pattern")
});

static EMAIL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}").expect("email pattern")
});

static IPV4: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:\d{1,3}\.){3}\d{1,3}\b").expect("ipv4 pattern"));

/// Output of [`clean`]: lowercase ASCII letters separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CleanText(String);

impl CleanText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for CleanText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CleanText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Ordered, non-empty, whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<&str> {
        self.0.first().map(String::as_str)
    }

    pub fn last(&self) -> Option<&str> {
        self.0.last().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }
}

/// Applies the cleaning rules to a raw tweet. Total and idempotent.
pub fn clean(raw: &str) -> CleanText {
    let text = URL.replace_all(raw, " ");
    let text = EMAIL.replace_all(&text, " ");
    let text = IPV4.replace_all(&text, " ");

    let mut kept = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch.is_ascii_alphabetic() {
            kept.push(ch.to_ascii_lowercase());
        } else if ch.is_whitespace() {
            kept.push(' ');
        }
        // digits, symbols, punctuation and emoji are dropped
    }

    CleanText(kept.split_whitespace().collect::<Vec<_>>().join(" "))
}

pub fn tokenize(clean: &CleanText) -> TokenSeq {
    TokenSeq(
        clean
            .as_str()
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect(),
    )
}

/// Convenience for `tokenize(&clean(raw))`.
pub fn clean_tokens(raw: &str) -> TokenSeq {
    tokenize(&clean(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_trailing_tco_url() {
        let out = clean("He voted against migration by voting brexit the wanker https://t.co/5t419W0iq9");
        assert_eq!(out.as_str(), "he voted against migration by voting brexit the wanker");
    }

    #[test]
    fn empty_input() {
        assert_eq!(clean("").as_str(), "");
        assert!(tokenize(&clean("")).is_empty());
    }

    #[test]
    fn mention_email_number_hashtag() {
        // url: none
        // email: "a@b.com" -> " "      => "@USER   Email me at   123 #tag"
        // ipv4: none
        // digits: "123" -> ""          => "@USER   Email me at    #tag"
        // symbols: '@', '#' dropped    => "USER   Email me at    tag"
        // lowercase + collapse         => "user email me at tag"
        assert_eq!(
            clean("@USER   Email me at a@b.com 123 #tag").as_str(),
            "user email me at tag"
        );
    }

    #[test]
    fn ip_and_bare_domain() {
        assert_eq!(clean("ping 192.168.0.1 now").as_str(), "ping now");
        assert_eq!(clean("see t.co/abc and www.x.org").as_str(), "see and");
        assert_eq!(clean("ftp://files.example.com/a.txt ok").as_str(), "ok");
    }

    #[test]
    fn punctuation_and_apostrophes() {
        assert_eq!(
            clean("Bloody hell is that all they can do ? https://t.co/JQOiOw8nPs").as_str(),
            "bloody hell is that all they can do"
        );
        assert_eq!(clean("I'm fine!!! 😀😀").as_str(), "im fine");
        assert_eq!(
            clean("Booking was successful. Reference number is : N0LQRA43.").as_str(),
            "booking was successful reference number is nlqra"
        );
    }

    #[test]
    fn tokenize_examples() {
        let toks = tokenize(&clean("shoot now asshole"));
        assert_eq!(toks.tokens(), ["shoot", "now", "asshole"]);
        assert_eq!(tokenize(&clean("a b")).tokens(), ["a", "b"]);
    }

    proptest! {
        #[test]
        fn idempotent(s in ".{0,80}") {
            let once = clean(&s);
            prop_assert_eq!(clean(once.as_str()), once);
        }

        #[test]
        fn invariants_hold(s in "[a-zA-Z0-9@#:/. _'!?\\-]{0,80}") {
            let c = clean(&s);
            let t = c.as_str();
            prop_assert!(!t.contains("  "));
            prop_assert_eq!(t.trim(), t);
            prop_assert!(t.chars().all(|ch| ch == ' ' || ch.is_ascii_lowercase()));
            for tok in tokenize(&c).iter() {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.contains(['#', '@']));
                prop_assert!(!tok.chars().any(|ch| ch.is_ascii_digit()));
            }
        }

        #[test]
        fn preserves_word_order(words in prop::collection::vec("[a-z]{1,8}", 0..12)) {
            let raw = words.join("  ");
            prop_assert_eq!(tokenize(&clean(&raw)).into_vec(), words);
        }
    }
}
