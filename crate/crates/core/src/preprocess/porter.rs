//! Classic Porter (1980) suffix-stripping stemmer.
//!
//! Operates on lowercase ASCII words. Words of one or two letters and
//! words containing anything other than `a-z` are returned unchanged.

/// Stem a single lowercase token.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut w = Word(token.as_bytes().to_vec());
    w.step1a();
    w.step1b();
    w.step1c();
    w.step2();
    w.step3();
    w.step4();
    w.step5a();
    w.step5b();
    // only a-z bytes ever enter or leave the buffer
    String::from_utf8(w.0).expect("ascii")
}

type Condition = fn(&[u8]) -> bool;

struct Word(Vec<u8>);

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in `[C](VC){m}[V]`.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let cons = is_consonant(w, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn contains_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// `*o`: stem ends consonant-vowel-consonant, last not w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn m_gt0(stem: &[u8]) -> bool {
    measure(stem) > 0
}

fn m_gt1(stem: &[u8]) -> bool {
    measure(stem) > 1
}

impl Word {
    fn ends_with(&self, suffix: &str) -> bool {
        self.0.ends_with(suffix.as_bytes())
    }

    fn stem_len(&self, suffix: &str) -> usize {
        self.0.len() - suffix.len()
    }

    fn replace(&mut self, suffix: &str, replacement: &str) {
        let keep = self.stem_len(suffix);
        self.0.truncate(keep);
        self.0.extend_from_slice(replacement.as_bytes());
    }

    /// Applies the rule with the longest matching suffix; rules are listed so
    /// that the first match is that one. A matching rule whose condition
    /// fails ends the step.
    fn apply_rules(&mut self, rules: &[(&str, &str, Condition)]) {
        for &(suffix, replacement, cond) in rules {
            if self.ends_with(suffix) {
                if cond(&self.0[..self.stem_len(suffix)]) {
                    self.replace(suffix, replacement);
                }
                return;
            }
        }
    }

    fn step1a(&mut self) {
        if self.ends_with("sses") {
            self.replace("sses", "ss");
        } else if self.ends_with("ies") {
            self.replace("ies", "i");
        } else if self.ends_with("s") && !self.ends_with("ss") {
            self.replace("s", "");
        }
    }

    fn step1b(&mut self) {
        if self.ends_with("eed") {
            if m_gt0(&self.0[..self.stem_len("eed")]) {
                self.replace("eed", "ee");
            }
            return;
        }
        let stripped = ["ed", "ing"]
            .into_iter()
            .find(|s| self.ends_with(s) && contains_vowel(&self.0[..self.stem_len(s)]));
        let Some(suffix) = stripped else { return };
        self.replace(suffix, "");

        if self.ends_with("at") {
            self.replace("at", "ate");
        } else if self.ends_with("bl") {
            self.replace("bl", "ble");
        } else if self.ends_with("iz") {
            self.replace("iz", "ize");
        } else if ends_double_consonant(&self.0) {
            if !matches!(self.0.last(), Some(b'l' | b's' | b'z')) {
                self.0.pop();
            }
        } else if measure(&self.0) == 1 && ends_cvc(&self.0) {
            self.0.push(b'e');
        }
    }

    fn step1c(&mut self) {
        if self.ends_with("y") && contains_vowel(&self.0[..self.stem_len("y")]) {
            self.replace("y", "i");
        }
    }

    fn step2(&mut self) {
        self.apply_rules(&[
            ("ational", "ate", m_gt0),
            ("tional", "tion", m_gt0),
            ("enci", "ence", m_gt0),
            ("anci", "ance", m_gt0),
            ("izer", "ize", m_gt0),
            ("abli", "able", m_gt0),
            ("alli", "al", m_gt0),
            ("entli", "ent", m_gt0),
            ("eli", "e", m_gt0),
            ("ousli", "ous", m_gt0),
            ("ization", "ize", m_gt0),
            ("ation", "ate", m_gt0),
            ("ator", "ate", m_gt0),
            ("alism", "al", m_gt0),
            ("iveness", "ive", m_gt0),
            ("fulness", "ful", m_gt0),
            ("ousness", "ous", m_gt0),
            ("aliti", "al", m_gt0),
            ("iviti", "ive", m_gt0),
            ("biliti", "ble", m_gt0),
        ]);
    }

    fn step3(&mut self) {
        self.apply_rules(&[
            ("icate", "ic", m_gt0),
            ("ative", "", m_gt0),
            ("alize", "al", m_gt0),
            ("iciti", "ic", m_gt0),
            ("ical", "ic", m_gt0),
            ("ful", "", m_gt0),
            ("ness", "", m_gt0),
        ]);
    }

    fn step4(&mut self) {
        fn ion(stem: &[u8]) -> bool {
            m_gt1(stem) && matches!(stem.last(), Some(b's' | b't'))
        }
        self.apply_rules(&[
            ("al", "", m_gt1),
            ("ance", "", m_gt1),
            ("ence", "", m_gt1),
            ("er", "", m_gt1),
            ("ic", "", m_gt1),
            ("able", "", m_gt1),
            ("ible", "", m_gt1),
            ("ant", "", m_gt1),
            ("ement", "", m_gt1),
            ("ment", "", m_gt1),
            ("ent", "", m_gt1),
            ("ion", "", ion),
            ("ou", "", m_gt1),
            ("ism", "", m_gt1),
            ("ate", "", m_gt1),
            ("iti", "", m_gt1),
            ("ous", "", m_gt1),
            ("ive", "", m_gt1),
            ("ize", "", m_gt1),
        ]);
    }

    fn step5a(&mut self) {
        if !self.ends_with("e") {
            return;
        }
        let stem = &self.0[..self.0.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            self.0.pop();
        }
    }

    fn step5b(&mut self) {
        if self.ends_with("ll") && measure(&self.0) > 1 {
            self.0.pop();
        }
    }
}
