//! CoNLL-X style treebanks with full or partial heads.
//!
//! Columns: ID FORM LEMMA CPOSTAG POSTAG FEATS HEAD DEPREL [PHEAD PDEPREL].
//! LEMMA, FEATS and DEPREL are ignored on input and written as `_`; an `_`
//! in the HEAD column marks an unannotated head.

use std::fmt;
use std::io::{self, BufRead, Write};

use pardep_core::corpus::{DepTree, PartialTree, PunctSet, Sentence, Token};
use pardep_core::train::Annotation;

/// How the HEAD column is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every head must be an integer; sentences become [`DepTree`]s.
    Full,
    /// `_` heads are allowed; sentences become [`PartialTree`]s.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub sentence: Sentence,
    pub annotation: Annotation,
}

impl Entry {
    pub fn full(sentence: Sentence, tree: DepTree) -> Self {
        Entry {
            sentence,
            annotation: Annotation::Full(tree),
        }
    }

    pub fn partial(sentence: Sentence, partial: PartialTree) -> Self {
        Entry {
            sentence,
            annotation: Annotation::Partial(partial),
        }
    }

    /// The complete tree, if this entry is fully annotated.
    pub fn tree(&self) -> Option<&DepTree> {
        match &self.annotation {
            Annotation::Full(t) => Some(t),
            Annotation::Partial(_) => None,
        }
    }
}

/// A rejected sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 0-based position of the sentence block in the file.
    pub sentence: usize,
    /// 1-based line where the sentence starts.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sentence {} (line {}): {}", self.sentence + 1, self.line, self.message)
    }
}

#[derive(Debug, Default)]
pub struct ReadResult {
    pub entries: Vec<Entry>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads every sentence block, rejecting invalid ones with a diagnostic.
pub fn read_treebank<R: BufRead>(reader: R, mode: Mode, punct: &PunctSet) -> io::Result<ReadResult> {
    let mut out = ReadResult::default();
    let mut block: Vec<String> = Vec::new();
    let mut start = 1;
    let mut index = 0;
    let mut flush = |block: &mut Vec<String>, start: usize, out: &mut ReadResult| {
        if block.is_empty() {
            return;
        }
        match parse_block(block, mode, punct) {
            Ok(e) => out.entries.push(e),
            Err(message) => out.diagnostics.push(Diagnostic {
                sentence: index,
                line: start,
                message,
            }),
        }
        index += 1;
        block.clear();
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut block, start, &mut out);
            continue;
        }
        if line.starts_with('#') && block.is_empty() {
            continue;
        }
        if block.is_empty() {
            start = i + 1;
        }
        block.push(line.to_owned());
    }
    flush(&mut block, start, &mut out);
    Ok(out)
}

fn parse_block(lines: &[String], mode: Mode, punct: &PunctSet) -> Result<Entry, String> {
    let mut tokens = Vec::with_capacity(lines.len());
    let mut heads = Vec::with_capacity(lines.len());
    for (k, line) in lines.iter().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 && cols.len() != 10 {
            return Err(format!("line {} has {} columns, expected 8 or 10", k + 1, cols.len()));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| format!("line {}: bad token id `{}`", k + 1, cols[0]))?;
        if id != k + 1 {
            return Err(format!("line {}: token id {} out of sequence", k + 1, id));
        }
        let pos = if cols[4] != "_" { cols[4] } else { cols[3] };
        tokens.push(Token::new(id, cols[1], pos, punct));
        heads.push(match cols[6] {
            "_" if mode == Mode::Partial => None,
            "_" => return Err(format!("token {id}: missing head in a fully annotated treebank")),
            h => Some(h.parse::<usize>().map_err(|_| format!("token {id}: bad head `{h}`"))?),
        });
    }
    let sentence = Sentence::new(tokens).map_err(|e| e.to_string())?;
    match mode {
        Mode::Full => {
            let heads: Vec<usize> = heads.into_iter().map(|h| h.expect("checked above")).collect();
            let tree = DepTree::new(heads).map_err(|e| e.to_string())?;
            Ok(Entry::full(sentence, tree))
        }
        Mode::Partial => {
            let partial = PartialTree::new(heads).map_err(|e| e.to_string())?;
            Ok(Entry::partial(sentence, partial))
        }
    }
}

/// Writes entries as 10-column blocks, each followed by a blank line.
pub fn write_treebank<W: Write>(mut w: W, entries: &[Entry]) -> io::Result<()> {
    for e in entries {
        for (i, tok) in e.sentence.tokens().iter().enumerate() {
            let head = match &e.annotation {
                Annotation::Full(t) => t.heads()[i].to_string(),
                Annotation::Partial(p) => p.heads()[i].map_or_else(|| "_".to_owned(), |h| h.to_string()),
            };
            writeln!(w, "{}\t{}\t_\t{}\t{}\t_\t{}\t_\t_\t_", tok.index, tok.form, tok.pos, tok.pos, head)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Splits full entries into `(sentence, tree)` pairs; partial entries are an error.
pub fn gold_pairs(entries: Vec<Entry>) -> Result<Vec<(Sentence, DepTree)>, String> {
    entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| match e.annotation {
            Annotation::Full(t) => Ok((e.sentence, t)),
            Annotation::Partial(_) => Err(format!("sentence {} is not fully annotated", i + 1)),
        })
        .collect()
}
