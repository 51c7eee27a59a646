//! Snowball stemmer for Dutch (the original Porter-style algorithm).
//!
//! Works on a `Vec<char>`; `I` and `Y` mark consonantal i/y during stemming
//! and are lowered again at the end.

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y' | 'è')
}

fn is_vowel_or_j(c: char) -> bool {
    is_vowel(c) || c == 'j'
}

fn is_vowel_or_cap_i(c: char) -> bool {
    is_vowel(c) || c == 'I'
}

struct Word {
    w: Vec<char>,
    p1: usize,
    p2: usize,
}

impl Word {
    fn ends_with(&self, suffix: &str) -> bool {
        let n = suffix.chars().count();
        self.w.len() >= n && self.w[self.w.len() - n..].iter().copied().eq(suffix.chars())
    }

    fn char_before(&self, pos: usize) -> Option<char> {
        pos.checked_sub(1).map(|i| self.w[i])
    }

    fn truncate(&mut self, len: usize) {
        self.w.truncate(len);
    }

    fn undouble(&mut self) {
        if self.ends_with("kk") || self.ends_with("dd") || self.ends_with("tt") {
            self.w.pop();
        }
    }

    /// `start` is the index where the `en`/`ene` suffix begins.
    fn en_ending(&mut self, start: usize) -> bool {
        let Some(prev) = self.char_before(start) else {
            return false;
        };
        let gem = start >= 3 && self.w[start - 3..start] == ['g', 'e', 'm'];
        if start >= self.p1 && !is_vowel(prev) && !gem {
            self.truncate(start);
            self.undouble();
            true
        } else {
            false
        }
    }

    fn e_ending(&mut self) -> bool {
        if !self.ends_with("e") {
            return false;
        }
        let start = self.w.len() - 1;
        match self.char_before(start) {
            Some(prev) if start >= self.p1 && !is_vowel(prev) => {
                self.truncate(start);
                self.undouble();
                true
            }
            _ => false,
        }
    }
}

fn prelude(w: &mut [char]) {
    for c in w.iter_mut() {
        *c = match *c {
            'ä' | 'á' => 'a',
            'ë' | 'é' => 'e',
            'ï' | 'í' => 'i',
            'ö' | 'ó' => 'o',
            'ü' | 'ú' => 'u',
            other => other,
        };
    }
    if w.first() == Some(&'y') {
        w[0] = 'Y';
    }
    for p in 0..w.len() {
        if !is_vowel(w[p]) || p + 1 >= w.len() {
            continue;
        }
        if w[p + 1] == 'i' && w.get(p + 2).is_some_and(|&c| is_vowel(c)) {
            w[p + 1] = 'I';
        } else if w[p + 1] == 'y' {
            w[p + 1] = 'Y';
        }
    }
}

/// Start of the region after the first non-vowel following a vowel, searching
/// from `from`.
fn region_after(w: &[char], from: usize) -> Option<usize> {
    let v = from + w[from..].iter().position(|&c| is_vowel(c))?;
    let nv = v + 1 + w[v + 1..].iter().position(|&c| !is_vowel(c))?;
    Some(nv + 1)
}

fn mark_regions(w: &[char]) -> (usize, usize) {
    let limit = w.len();
    if limit < 3 {
        return (limit, limit);
    }
    let Some(r1) = region_after(w, 0) else {
        return (limit, limit);
    };
    // The R2 search continues from the unadjusted R1 start.
    let p2 = region_after(w, r1).unwrap_or(limit);
    (r1.max(3), p2)
}

fn standard_suffix(word: &mut Word) {
    let len = word.w.len();
    if word.ends_with("heden") {
        if len - 5 >= word.p1 {
            word.truncate(len - 5);
            word.w.extend("heid".chars());
        }
    } else if word.ends_with("ene") {
        word.en_ending(len - 3);
    } else if word.ends_with("en") {
        word.en_ending(len - 2);
    } else if word.ends_with("se") || word.ends_with("s") {
        let start = if word.ends_with("se") { len - 2 } else { len - 1 };
        if let Some(prev) = word.char_before(start) {
            if start >= word.p1 && !is_vowel_or_j(prev) {
                word.truncate(start);
            }
        }
    }

    let e_found = word.e_ending();

    if word.ends_with("heid") {
        let start = word.w.len() - 4;
        if start >= word.p2 && word.char_before(start) != Some('c') {
            word.truncate(start);
            if word.ends_with("en") {
                let s = word.w.len() - 2;
                word.en_ending(s);
            }
        }
    }

    let len = word.w.len();
    if word.ends_with("end") || word.ends_with("ing") {
        let start = len - 3;
        if start >= word.p2 {
            word.truncate(start);
            let ig = word.ends_with("ig") && {
                let s = word.w.len() - 2;
                s >= word.p2 && word.char_before(s) != Some('e')
            };
            if ig {
                let s = word.w.len() - 2;
                word.truncate(s);
            } else {
                word.undouble();
            }
        }
    } else if word.ends_with("lijk") {
        let start = len - 4;
        if start >= word.p2 {
            word.truncate(start);
            word.e_ending();
        }
    } else if word.ends_with("baar") {
        let start = len - 4;
        if start >= word.p2 {
            word.truncate(start);
        }
    } else if word.ends_with("bar") {
        let start = len - 3;
        if start >= word.p2 && e_found {
            word.truncate(start);
        }
    } else if word.ends_with("ig") {
        let start = len - 2;
        if start >= word.p2 && word.char_before(start) != Some('e') {
            word.truncate(start);
        }
    }

    // Undouble a long vowel in a closed final syllable: "maan" -> "man".
    let w = &word.w;
    let n = w.len();
    if n >= 4 && !is_vowel_or_cap_i(w[n - 1]) {
        let pair = (w[n - 3], w[n - 2]);
        let doubled = matches!(pair, ('a', 'a') | ('e', 'e') | ('o', 'o') | ('u', 'u'));
        if doubled && !is_vowel(w[n - 4]) {
            word.w.remove(n - 2);
        }
    }
}

pub fn stem(token: &str) -> String {
    let mut w: Vec<char> = token.chars().collect();
    prelude(&mut w);
    let (p1, p2) = mark_regions(&w);
    let mut word = Word { w, p1, p2 };
    standard_suffix(&mut word);
    word.w
        .into_iter()
        .map(|c| match c {
            'I' => 'i',
            'Y' => 'y',
            other => other,
        })
        .collect()
}
