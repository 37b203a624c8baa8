//! On-disk clip collections: `root/<split>/<id>/clip.vclp` listed by
//! `root/<split>/index.tsv` (columns `id path frames h w`, paths relative to
//! the split directory).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::vclp::{read_video, write_video, SampleFormat};
use super::VideoClip;
use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "index.tsv";
const HEADER: &str = "id\tpath\tframes\th\tw";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexEntry {
    pub id: String,
    pub path: PathBuf,
    pub frames: usize,
    pub h: usize,
    pub w: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub split: String,
    pub entries: Vec<IndexEntry>,
}

fn split_dir(root: &Path, split: &str) -> PathBuf {
    root.join(split)
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['\t', '\n', '/', '\\']) || id == "." || id == ".." {
        return Err(Error::Malformed(format!("bad clip id {id:?}")));
    }
    Ok(())
}

impl DatasetIndex {
    /// Writes `clips` under `root/<split>/` and returns the loaded index.
    pub fn create(root: &Path, split: &str, clips: &[(String, VideoClip)], format: SampleFormat) -> Result<Self> {
        check_id(split)?;
        let dir = split_dir(root, split);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut seen = HashSet::new();
        let mut index = format!("{HEADER}\n");
        for (id, clip) in clips {
            check_id(id)?;
            if !seen.insert(id.as_str()) {
                return Err(Error::Malformed(format!("duplicate clip id {id:?}")));
            }
            let clip_dir = dir.join(id);
            fs::create_dir_all(&clip_dir).map_err(|e| Error::io(&clip_dir, e))?;
            write_video(&clip_dir.join("clip.vclp"), clip, format)?;
            writeln!(index, "{id}\t{id}/clip.vclp\t{}\t{}\t{}", clip.frames, clip.height, clip.width).unwrap();
        }
        let path = dir.join(INDEX_FILE);
        fs::write(&path, index).map_err(|e| Error::io(&path, e))?;
        DatasetIndex::load(root, split)
    }

    /// Parses the index, checking unique ids and that every clip file exists.
    pub fn load(root: &Path, split: &str) -> Result<Self> {
        let dir = split_dir(root, split);
        let path = dir.join(INDEX_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(HEADER) {
            return Err(Error::Malformed(format!("{}: header must be {HEADER:?}", path.display())));
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |what: &str| Error::Malformed(format!("{}:{}: {what}", path.display(), n + 2));
            let cols: Vec<&str> = line.split('\t').collect();
            let [id, rel, frames, h, w] = cols[..] else {
                return Err(bad(&format!("expected 5 columns, got {}", cols.len())));
            };
            let num = |s: &str, col: &str| s.parse::<usize>().map_err(|_| bad(&format!("{col} {s:?} is not a count")));
            let entry = IndexEntry {
                id: id.to_string(),
                path: dir.join(rel),
                frames: num(frames, "frames")?,
                h: num(h, "h")?,
                w: num(w, "w")?,
            };
            check_id(id)?;
            if !seen.insert(entry.id.clone()) {
                return Err(bad(&format!("duplicate id {id:?}")));
            }
            if !entry.path.is_file() {
                return Err(bad(&format!("clip {} does not exist", entry.path.display())));
            }
            entries.push(entry);
        }
        Ok(DatasetIndex {
            root: root.to_path_buf(),
            split: split.to_string(),
            entries,
        })
    }

    /// Reads one clip and checks it against its index row.
    pub fn load_clip(&self, entry: &IndexEntry) -> Result<VideoClip> {
        let clip = read_video(&entry.path)?;
        if (clip.frames, clip.height, clip.width) != (entry.frames, entry.h, entry.w) {
            return Err(Error::Malformed(format!(
                "clip {}: index says {}×{}×{}, file holds {}×{}×{}",
                entry.id, entry.frames, entry.h, entry.w, clip.frames, clip.height, clip.width
            )));
        }
        Ok(clip)
    }

    pub fn load_all(&self) -> Result<Vec<(String, VideoClip)>> {
        self.entries.iter().map(|e| Ok((e.id.clone(), self.load_clip(e)?))).collect()
    }
}
