//! MediaWiki XML export adapter.
//!
//! Only article pages (namespace 0) that are neither redirects nor
//! disambiguation pages are kept. Each article body is cut at its
//! References heading, category links are lifted into the
//! [`CategoryIndex`] and removed from the text, and the remainder is
//! tokenized if it still carries at least `min_bytes` bytes.

use std::io::BufRead;

use quick_xml::escape::resolve_predefined_entity;
use quick_xml::events::Event;
use quick_xml::Reader;

use super::{tokenize, CategoryIndex, Corpus, DocId, Document, DEFAULT_SHARDS};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_BYTES: usize = 300;

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub min_bytes: usize,
    pub shards: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            min_bytes: DEFAULT_MIN_BYTES,
            shards: DEFAULT_SHARDS,
        }
    }
}

/// Per-reason page tallies from one ingest run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub pages: usize,
    pub kept: usize,
    pub redirects: usize,
    pub other_namespace: usize,
    pub disambiguation: usize,
    pub too_short: usize,
}

/// Body text and category links of one article after truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleBody {
    pub body: String,
    pub categories: Vec<String>,
}

#[derive(Debug, Default)]
struct PageFields {
    title: String,
    ns: String,
    id: String,
    text: String,
    redirect: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Title,
    Ns,
    Id,
    Text,
}

pub fn ingest_wiki_dump<R: BufRead>(
    input: R,
    options: IngestOptions,
) -> Result<(Corpus, CategoryIndex, IngestStats)> {
    let mut reader = Reader::from_reader(input);
    let mut corpus = Corpus::new(options.shards);
    let mut index = CategoryIndex::new();
    let mut stats = IngestStats::default();

    let mut buf = Vec::new();
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut page: Option<PageFields> = None;
    let mut field: Option<Field> = None;

    loop {
        let offset = reader.buffer_position();
        let xml_err = |message: String| Error::Ingest { offset, message };
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_err(e.to_string()))?;
        match event {
            Event::Start(e) => {
                let name = e.local_name().as_ref().to_vec();
                let parent = stack.last().map(Vec::as_slice);
                match (name.as_slice(), parent) {
                    (b"page", _) => page = Some(PageFields::default()),
                    (b"title", Some(b"page")) => field = Some(Field::Title),
                    (b"ns", Some(b"page")) => field = Some(Field::Ns),
                    (b"id", Some(b"page")) => field = Some(Field::Id),
                    (b"text", Some(b"revision")) => field = Some(Field::Text),
                    (b"redirect", Some(b"page")) => {
                        if let Some(p) = page.as_mut() {
                            p.redirect = true;
                        }
                    }
                    _ => {}
                }
                stack.push(name);
            }
            Event::Empty(e) => {
                if e.local_name().as_ref() == b"redirect" {
                    if let Some(p) = page.as_mut() {
                        p.redirect = true;
                    }
                }
            }
            Event::End(e) => {
                let name = e.local_name().as_ref().to_vec();
                if stack.pop().as_deref() != Some(name.as_slice()) {
                    return Err(xml_err(format!(
                        "unexpected closing tag </{}>",
                        String::from_utf8_lossy(&name)
                    )));
                }
                field = None;
                if name == b"page" {
                    if let Some(fields) = page.take() {
                        accept_page(fields, &options, &mut corpus, &mut index, &mut stats)
                            .map_err(|message| Error::Ingest { offset, message })?;
                    }
                }
            }
            Event::Text(t) => {
                if let (Some(f), Some(p)) = (field, page.as_mut()) {
                    let text = t.decode().map_err(|e| xml_err(e.to_string()))?;
                    p.push(f, &text);
                }
            }
            Event::CData(t) => {
                if let (Some(f), Some(p)) = (field, page.as_mut()) {
                    let text = t.decode().map_err(|e| xml_err(e.to_string()))?;
                    p.push(f, &text);
                }
            }
            Event::GeneralRef(r) => {
                if let (Some(f), Some(p)) = (field, page.as_mut()) {
                    let resolved = match r.resolve_char_ref().map_err(|e| xml_err(e.to_string()))? {
                        Some(c) => c.to_string(),
                        None => {
                            let name = r.decode().map_err(|e| xml_err(e.to_string()))?;
                            resolve_predefined_entity(&name)
                                .ok_or_else(|| xml_err(format!("unknown entity &{name};")))?
                                .to_owned()
                        }
                    };
                    p.push(f, &resolved);
                }
            }
            Event::Eof => {
                if !stack.is_empty() {
                    return Err(Error::Ingest {
                        offset,
                        message: "unexpected end of input inside an element".into(),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok((corpus, index, stats))
}

impl PageFields {
    fn push(&mut self, field: Field, text: &str) {
        match field {
            Field::Title => self.title.push_str(text),
            Field::Ns => self.ns.push_str(text),
            Field::Id => self.id.push_str(text),
            Field::Text => self.text.push_str(text),
        }
    }
}

fn accept_page(
    page: PageFields,
    options: &IngestOptions,
    corpus: &mut Corpus,
    index: &mut CategoryIndex,
    stats: &mut IngestStats,
) -> std::result::Result<(), String> {
    stats.pages += 1;
    if page.ns.trim() != "0" {
        stats.other_namespace += 1;
        return Ok(());
    }
    if page.redirect || page.text.trim_start().to_ascii_lowercase().starts_with("#redirect") {
        stats.redirects += 1;
        return Ok(());
    }
    if is_disambiguation(&page.title, &page.text) {
        stats.disambiguation += 1;
        return Ok(());
    }
    let article = split_article(&page.text);
    if article.body.trim().len() < options.min_bytes {
        stats.too_short += 1;
        return Ok(());
    }
    let id: DocId = page
        .id
        .trim()
        .parse()
        .map_err(|_| format!("page {:?} has invalid id {:?}", page.title, page.id))?;
    corpus
        .insert(Document::new(id, page.title.trim(), tokenize(&article.body)))
        .map_err(|e| e.to_string())?;
    for category in article.categories {
        index.add(category, id);
    }
    stats.kept += 1;
    Ok(())
}

fn is_disambiguation(title: &str, text: &str) -> bool {
    const MARKERS: [&str; 6] = [
        "{{disambiguation",
        "{{disambig}}",
        "{{disambig|",
        "{{dab}}",
        "{{hndis",
        "{{geodis",
    ];
    let lower = text.to_lowercase();
    title.trim_end().ends_with("(disambiguation)") || MARKERS.iter().any(|m| lower.contains(m))
}

/// Collects category links from the whole text, then truncates at the
/// References heading and strips category links from what remains.
pub fn split_article(text: &str) -> ArticleBody {
    let categories = category_links(text)
        .into_iter()
        .map(|(_, name)| name)
        .fold(Vec::new(), |mut acc: Vec<String>, name| {
            if !acc.contains(&name) {
                acc.push(name);
            }
            acc
        });

    let mut end = text.len();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        if is_references_heading(line) {
            end = pos;
            break;
        }
        pos += line.len();
    }
    let truncated = &text[..end];

    let mut body = String::with_capacity(truncated.len());
    let mut last = 0;
    for (range, _) in category_links(truncated) {
        body.push_str(&truncated[last..range.start]);
        last = range.end;
    }
    body.push_str(&truncated[last..]);
    ArticleBody { body, categories }
}

fn is_references_heading(line: &str) -> bool {
    let line = line.trim();
    if line.len() < 4 || !line.starts_with("==") || !line.ends_with("==") {
        return false;
    }
    line.trim_matches('=').trim().eq_ignore_ascii_case("references")
}

/// `[[Category:Name|sort key]]` links with their byte ranges.
fn category_links(text: &str) -> Vec<(std::ops::Range<usize>, String)> {
    const PREFIX: &str = "category:";
    let mut links = Vec::new();
    let mut from = 0;
    while let Some(rel) = text[from..].find("[[") {
        let start = from + rel;
        let inner_start = start + 2;
        let Some(close_rel) = text[inner_start..].find("]]") else {
            break;
        };
        let inner_end = inner_start + close_rel;
        let inner = text[inner_start..inner_end].trim_start();
        let is_category = inner
            .get(..PREFIX.len())
            .is_some_and(|p| p.eq_ignore_ascii_case(PREFIX))
            && !inner.contains("[[");
        if is_category {
            let name = inner[PREFIX.len()..]
                .split('|')
                .next()
                .unwrap_or("")
                .trim()
                .replace('_', " ");
            if !name.is_empty() {
                links.push((start..inner_end + 2, name));
            }
            from = inner_end + 2;
        } else {
            from = inner_start;
        }
    }
    links
}
