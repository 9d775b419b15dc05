//! On-disk layout of a corpus store:
//!
//! ```text
//! <root>/corpus.meta                 shards and document counts
//! <root>/shards/shard-NNNNN.tsv      id \t title \t space-joined sorted tokens
//! <root>/categories/<name>.txt       member ids, one per line, ascending
//! ```
//!
//! Titles escape `\`, tab, CR and LF. Category file names percent-encode
//! every byte outside `[A-Za-z0-9_-]`.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{CategoryIndex, Corpus, DocId, Document};
use crate::error::{Error, Result};

const META: &str = "corpus.meta";
const SHARDS: &str = "shards";
const CATEGORIES: &str = "categories";

fn shard_path(root: &Path, shard: usize) -> PathBuf {
    root.join(SHARDS).join(format!("shard-{shard:05}.tsv"))
}

fn store_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Store {
        path: path.to_owned(),
        message: message.into(),
    }
}

pub fn store_corpus(corpus: &Corpus, index: &CategoryIndex, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    index.validate(corpus)?;
    fs::create_dir_all(root)?;
    for sub in [SHARDS, CATEGORIES] {
        let dir = root.join(sub);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
    }

    fs::write(
        root.join(META),
        format!("shards\t{}\ndocuments\t{}\n", corpus.shard_count(), corpus.len()),
    )?;

    for shard in 0..corpus.shard_count() {
        let mut out = BufWriter::new(fs::File::create(shard_path(root, shard))?);
        for doc in corpus.shard(shard) {
            let tokens: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
            writeln!(out, "{}\t{}\t{}", doc.id, escape(&doc.title), tokens.join(" "))?;
        }
        out.flush()?;
    }

    for (name, members) in index.iter() {
        let path = root.join(CATEGORIES).join(format!("{}.txt", encode_name(name)));
        let mut out = BufWriter::new(fs::File::create(path)?);
        for id in members {
            writeln!(out, "{id}")?;
        }
        out.flush()?;
    }
    Ok(())
}

pub fn load_corpus(root: impl AsRef<Path>) -> Result<(Corpus, CategoryIndex)> {
    let root = root.as_ref();
    let meta_path = root.join(META);
    let meta = fs::read_to_string(&meta_path)
        .map_err(|e| store_err(&meta_path, format!("cannot read metadata: {e}")))?;
    let (shards, documents) = parse_meta(&meta).ok_or_else(|| store_err(&meta_path, "corrupt metadata"))?;

    let mut corpus = Corpus::new(shards);
    for shard in 0..shards {
        let path = shard_path(root, shard);
        let shard_err = |message: String| Error::Shard {
            shard,
            path: path.clone(),
            message,
        };
        let file = fs::File::open(&path).map_err(|e| shard_err(format!("cannot open: {e}")))?;
        for (line_no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| shard_err(e.to_string()))?;
            let doc = parse_record(&line)
                .ok_or_else(|| shard_err(format!("corrupt record on line {}", line_no + 1)))?;
            if super::shard_of(doc.id, shards) != shard {
                return Err(shard_err(format!("document {} stored in the wrong shard", doc.id)));
            }
            corpus.insert(doc).map_err(|e| shard_err(e.to_string()))?;
        }
    }
    if corpus.len() != documents {
        return Err(store_err(
            &meta_path,
            format!("metadata lists {documents} documents, shards hold {}", corpus.len()),
        ));
    }

    let mut index = CategoryIndex::new();
    let cat_dir = root.join(CATEGORIES);
    let mut entries: Vec<PathBuf> = fs::read_dir(&cat_dir)
        .map_err(|e| store_err(&cat_dir, e.to_string()))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for path in entries {
        let Some(stem) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(".txt"))
        else {
            continue;
        };
        let name = decode_name(stem).ok_or_else(|| store_err(&path, "bad category file name"))?;
        let text = fs::read_to_string(&path)?;
        for line in text.lines() {
            let id: DocId = line
                .parse()
                .map_err(|_| store_err(&path, format!("bad document id {line:?}")))?;
            if !corpus.contains(id) {
                return Err(store_err(&path, format!("unknown document id {id}")));
            }
            index.add(name.clone(), id);
        }
        // categories with no members are still kept
        if text.is_empty() {
            index.categories.entry(name).or_default();
        }
    }
    Ok((corpus, index))
}

fn parse_meta(meta: &str) -> Option<(usize, usize)> {
    let mut shards = None;
    let mut documents = None;
    for line in meta.lines() {
        let (key, value) = line.split_once('\t')?;
        match key {
            "shards" => shards = value.parse().ok(),
            "documents" => documents = value.parse().ok(),
            _ => {}
        }
    }
    Some((shards.filter(|&s| s > 0)?, documents?))
}

fn parse_record(line: &str) -> Option<Document> {
    let mut fields = line.splitn(3, '\t');
    let id = fields.next()?.parse().ok()?;
    let title = unescape(fields.next()?)?;
    let tokens: BTreeSet<String> = fields
        .next()?
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    Some(Document { id, title, tokens })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

fn encode_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for b in name.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn decode_name(encoded: &str) -> Option<String> {
    let bytes = encoded.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = encoded.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}
