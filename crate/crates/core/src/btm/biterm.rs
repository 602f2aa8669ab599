use crate::corpus::TokenizedDoc;

/// An unordered pair of vocabulary indices, stored with `w1 <= w2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Biterm {
    pub w1: usize,
    pub w2: usize,
}

impl Biterm {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Self { w1: a, w2: b }
        } else {
            Self { w1: b, w2: a }
        }
    }
}

/// Maximum position distance (exclusive) between the two words of a biterm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// The whole document is one context.
    #[default]
    Unbounded,
    Span(usize),
}

impl Window {
    fn admits(self, distance: usize) -> bool {
        match self {
            Window::Unbounded => true,
            Window::Span(w) => distance < w,
        }
    }
}

/// Biterms per document plus the corpus-wide multiset (document order).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitermSet {
    pub per_doc: Vec<Vec<Biterm>>,
    pub all: Vec<Biterm>,
}

pub fn doc_biterms(tokens: &[usize], window: Window) -> Vec<Biterm> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for j in i + 1..tokens.len() {
            if !window.admits(j - i) {
                break;
            }
            out.push(Biterm::new(tokens[i], tokens[j]));
        }
    }
    out
}

pub fn extract_biterms(docs: &[TokenizedDoc], window: Window) -> BitermSet {
    if let Window::Span(w) = window {
        assert!(w >= 2, "biterm window must be at least 2");
    }
    let per_doc: Vec<Vec<Biterm>> = docs.iter().map(|d| doc_biterms(&d.tokens, window)).collect();
    let all = per_doc.iter().flatten().copied().collect();
    BitermSet { per_doc, all }
}
