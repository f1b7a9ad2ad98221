//! Heuristic seed labels (profile hashtags, media endorsements) and label
//! propagation over the interaction graph.

use crate::graph::{EdgeType, SocialGraph};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    /// Class index used by supervised heads: left 0, right 1.
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(Error::invalid(format!("unknown side '{other}' (allowed: left, right)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Hashtag,
    Media,
    Both,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Hashtag => "hashtag",
            Provenance::Media => "media",
            Provenance::Both => "both",
        }
    }
}

const LEFT_HASHTAGS: [&str; 17] = [
    "Resist",
    "FBR",
    "TheResistance",
    "Resistance",
    "Biden2020",
    "VoteBlue",
    "VoteBlueNoMatterWho",
    "Bernie2020",
    "BlueWave",
    "BackTheBlue",
    "NotMyPresident",
    "NeverTrump",
    "Resister",
    "VoteBlue2020",
    "ImpeachTrump",
    "BlueWave2020",
    "YangGang",
];

const RIGHT_HASHTAGS: [&str; 12] = [
    "MAGA",
    "KAG",
    "Trump2020",
    "WWG1WGA",
    "QAnon",
    "Trump",
    "KAG2020",
    "Conservative",
    "BuildTheWall",
    "AmericaFirst",
    "TheGreatAwakening",
    "TrumpTrain",
];

/// (Twitter handle, domain, AllSides-style rating 1..5)
const MEDIA: [(&str, &str, u8); 29] = [
    ("ABC", "abcnews.go.com", 2),
    ("BBCWorld", "bbc.com", 3),
    ("BreitbartNews", "breitbart.com", 5),
    ("BostonGlobe", "bostonglobe.com", 2),
    ("businessinsider", "businessinsider.com", 3),
    ("BuzzFeedNews", "buzzfeednews.com", 1),
    ("CBSNews", "cbsnews.com", 2),
    ("chicagotribune", "chicagotribune.com", 3),
    ("CNBC", "cnbc.com", 3),
    ("CNN", "cnn.com", 2),
    ("DailyCaller", "dailycaller.com", 5),
    ("DailyMail", "dailymail.co.uk", 5),
    ("FoxNews", "foxnews.com", 4),
    ("HuffPost", "huffpost.com", 1),
    ("InfoWars", "infowars.com", 5),
    ("latimes", "latimes.com", 2),
    ("MSNBC", "msnbc.com", 1),
    ("NBCNews", "nbcnews.com", 2),
    ("nytimes", "nytimes.com", 2),
    ("NPR", "npr.org", 3),
    ("OANN", "oann.com", 4),
    ("PBS", "pbs.org", 3),
    ("Reuters", "reuters.com", 3),
    ("guardian", "theguardian.com", 2),
    ("USATODAY", "usatoday.com", 3),
    ("YahooNews", "yahoo.com", 2),
    ("VICE", "vice.com", 1),
    ("washingtonpost", "washingtonpost.com", 2),
    ("WSJ", "wsj.com", 3),
];

/// Hashtag sides and media ratings.
///
/// Hashtags are stored lowercase without `#`. Media can be looked up by
/// handle (with or without `@`), by domain or URL, or by the domain's first
/// label (`foxnews` for `foxnews.com`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lexicon {
    hashtags: HashMap<String, Side>,
    media: HashMap<String, u8>,
    domains: HashMap<String, u8>,
}

fn first_label(domain: &str) -> &str {
    domain.split('.').next().unwrap_or(domain)
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The built-in hashtag and media tables.
    pub fn builtin() -> Self {
        let mut lex = Lexicon::new();
        for h in LEFT_HASHTAGS {
            lex.add_hashtag(h, Side::Left);
        }
        for h in RIGHT_HASHTAGS {
            lex.add_hashtag(h, Side::Right);
        }
        for (handle, domain, rating) in MEDIA {
            lex.add_media(handle, domain, rating).expect("built-in ratings are in range");
        }
        lex
    }

    pub fn add_hashtag(&mut self, tag: &str, side: Side) {
        self.hashtags
            .insert(tag.trim().trim_start_matches('#').to_lowercase(), side);
    }

    pub fn add_media(&mut self, handle: &str, domain: &str, rating: u8) -> Result<()> {
        if !(1..=5).contains(&rating) {
            return Err(Error::invalid(format!("media rating {rating} outside 1..5")));
        }
        let handle = handle.trim().trim_start_matches('@').trim().to_lowercase();
        if !handle.is_empty() {
            self.media.insert(handle, rating);
        }
        if let Some(host) = host_of(domain) {
            self.media.entry(first_label(&host).to_string()).or_insert(rating);
            self.domains.insert(host, rating);
        }
        Ok(())
    }

    pub fn hashtag_side(&self, tag: &str) -> Option<Side> {
        self.hashtags.get(&tag.trim_start_matches('#').to_lowercase()).copied()
    }

    pub fn hashtag_count(&self) -> usize {
        self.hashtags.len()
    }

    /// Rating of a media id: handle, stem, domain or URL.
    pub fn media_rating(&self, id: &str) -> Option<u8> {
        let id = id.trim();
        if let Some(handle) = id.strip_prefix('@') {
            return self.media.get(&handle.trim().to_lowercase()).copied();
        }
        if let Some(r) = self.media.get(&id.to_lowercase()) {
            return Some(*r);
        }
        let host = host_of(id)?;
        let mut h = host.as_str();
        loop {
            if let Some(r) = self.domains.get(h) {
                return Some(*r);
            }
            h = h.split_once('.')?.1;
        }
    }

    /// Reads hashtags from a CSV with columns `hashtag,side`.
    pub fn load_hashtags_csv(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        for (i, row) in r.deserialize::<HashtagRow>().enumerate() {
            let row = row.map_err(|e| csv_err(path, e))?;
            let side = row.side.parse().map_err(|e: Error| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: e.to_string(),
            })?;
            self.add_hashtag(&row.hashtag, side);
        }
        Ok(())
    }

    /// Reads media from a CSV with columns `handle,url,rating`.
    pub fn load_media_csv(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        for (i, row) in r.deserialize::<MediaRow>().enumerate() {
            let row = row.map_err(|e| csv_err(path, e))?;
            self.add_media(&row.handle, &row.url, row.rating).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct HashtagRow {
    hashtag: String,
    side: String,
}

#[derive(Deserialize)]
struct MediaRow {
    handle: String,
    url: String,
    rating: u8,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Lowercase host of a domain or URL, without `www.`; `None` if it has no dot.
fn host_of(s: &str) -> Option<String> {
    let s = s.trim().to_lowercase();
    let s = s.split_once("://").map_or(s.as_str(), |(_, rest)| rest);
    let host = s.split(['/', '?', '#']).next()?;
    let host = host.rsplit_once('@').map_or(host, |(_, h)| h);
    let host = host.split(':').next()?;
    let host = host.strip_prefix("www.").unwrap_or(host);
    host.contains('.').then(|| host.to_string())
}

/// Side with strictly more matching profile hashtags; `None` on a tie.
///
/// Tokens are whitespace-separated and must start with `#`; trailing
/// punctuation is ignored and matching is case-insensitive.
pub fn label_from_hashtags(profile: &str, lex: &Lexicon) -> Option<Side> {
    let (mut left, mut right) = (0usize, 0usize);
    for tok in profile.split_whitespace() {
        let Some(tag) = tok.strip_prefix('#') else { continue };
        let tag = tag.trim_end_matches(|c: char| c.is_ascii_punctuation() && c != '_');
        match lex.hashtag_side(tag) {
            Some(Side::Left) => left += 1,
            Some(Side::Right) => right += 1,
            None => {}
        }
    }
    match left.cmp(&right) {
        std::cmp::Ordering::Greater => Some(Side::Left),
        std::cmp::Ordering::Less => Some(Side::Right),
        std::cmp::Ordering::Equal => None,
    }
}

/// Outcome of the media-endorsement heuristic for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediaLabel {
    pub side: Option<Side>,
    /// Endorsements of rated outlets (repeats count).
    pub known: usize,
    /// Endorsements ignored because the outlet is not in the lexicon.
    pub unknown: usize,
    pub mean_rating: Option<f64>,
}

pub const MIN_ENDORSEMENTS: usize = 2;

/// Mean rating over at least two rated endorsements: `<= 2` is left,
/// `>= 4` right, anything between unlabeled.
pub fn label_from_media<S: AsRef<str>>(endorsements: &[S], lex: &Lexicon) -> MediaLabel {
    let mut sum = 0u32;
    let mut known = 0usize;
    let mut unknown = 0usize;
    for e in endorsements {
        match lex.media_rating(e.as_ref()) {
            Some(r) => {
                sum += u32::from(r);
                known += 1;
            }
            None => unknown += 1,
        }
    }
    if known < MIN_ENDORSEMENTS {
        return MediaLabel {
            side: None,
            known,
            unknown,
            mean_rating: None,
        };
    }
    // Compare on integers to keep the thresholds exact.
    let side = if sum <= 2 * known as u32 {
        Some(Side::Left)
    } else if sum >= 4 * known as u32 {
        Some(Side::Right)
    } else {
        None
    };
    MediaLabel {
        side,
        known,
        unknown,
        mean_rating: Some(f64::from(sum) / known as f64),
    }
}

/// Hashtag label wins; otherwise whichever is present.
pub fn combine_labels(hashtag: Option<Side>, media: Option<Side>) -> Option<(Side, Provenance)> {
    match (hashtag, media) {
        (Some(h), Some(m)) if h == m => Some((h, Provenance::Both)),
        (Some(h), _) => Some((h, Provenance::Hashtag)),
        (None, Some(m)) => Some((m, Provenance::Media)),
        (None, None) => None,
    }
}

/// Seed labels indexed by node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeedLabels {
    labels: Vec<Option<(Side, Provenance)>>,
}

impl SeedLabels {
    pub fn new(n: usize) -> Self {
        SeedLabels { labels: vec![None; n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn set(&mut self, node: usize, side: Side, provenance: Provenance) {
        self.labels[node] = Some((side, provenance));
    }

    pub fn get(&self, node: usize) -> Option<(Side, Provenance)> {
        self.labels[node]
    }

    pub fn side(&self, node: usize) -> Option<Side> {
        self.labels[node].map(|(s, _)| s)
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().flatten().count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Side, Provenance)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|(s, p)| (i, s, p)))
    }

    /// Writes `node,side,provenance` rows for labeled nodes.
    pub fn write_csv(&self, ids: &[String], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["node", "side", "provenance"]).map_err(|e| csv_err(path, e))?;
        for (i, s, p) in self.iter() {
            w.write_record([ids[i].as_str(), s.as_str(), p.as_str()])
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads the layout written by [`write_csv`](Self::write_csv); nodes are
    /// resolved against `ids`.
    pub fn read_csv(ids: &[String], path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut out = SeedLabels::new(ids.len());
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        for (i, row) in r.deserialize::<(String, Side, Provenance)>().enumerate() {
            let (node, side, prov) = row.map_err(|e| csv_err(path, e))?;
            let &n = index.get(node.as_str()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("unknown node '{node}'"),
            })?;
            out.set(n, side, prov);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub labels: Vec<Option<Side>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Synchronous label propagation over undirected, weighted neighbors.
///
/// Seeds keep their labels. Every other node takes the side with the larger
/// total edge weight among its labeled neighbors in the previous round;
/// ties and nodes without labeled neighbors stay unlabeled. `etypes`
/// restricts the layers used (all when empty).
pub fn label_propagation(
    g: &SocialGraph,
    seeds: &SeedLabels,
    etypes: &[EdgeType],
    max_iters: usize,
) -> Result<Propagation> {
    if seeds.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            actual: seeds.len(),
        });
    }
    if seeds.labeled_count() == 0 {
        return Err(Error::InsufficientData("label propagation needs at least one seed".into()));
    }
    let layers: Vec<EdgeType> = if etypes.is_empty() {
        g.etypes().collect()
    } else {
        etypes.to_vec()
    };
    let n = g.node_count();
    let mut cur: Vec<Option<Side>> = (0..n).map(|i| seeds.side(i)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut next = cur.clone();
        for v in 0..n {
            if seeds.side(v).is_some() {
                continue;
            }
            let mut w = [0.0f64; 2];
            for &et in &layers {
                for e in g.out_edges(et, v) {
                    if let Some(s) = cur[e.dst] {
                        w[s.index()] += e.weight;
                    }
                }
                for e in g.in_edges(et, v) {
                    if let Some(s) = cur[e.src] {
                        w[s.index()] += e.weight;
                    }
                }
            }
            next[v] = if w[0] > w[1] {
                Some(Side::Left)
            } else if w[1] > w[0] {
                Some(Side::Right)
            } else {
                None
            };
        }
        if next == cur {
            converged = true;
            break;
        }
        cur = next;
    }
    Ok(Propagation {
        labels: cur,
        iterations,
        converged,
    })
}
