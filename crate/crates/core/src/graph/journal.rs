//! Append-only journal of committed changes.
//!
//! Each record is framed as a little-endian `u32` payload length, a
//! little-endian `u32` CRC-32 of the payload, then the payload: one JSON
//! [`JournalRecord`]. Replay stops at the first truncated or corrupt frame,
//! which is how a torn write at the tail is tolerated.

use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{EdgeRecord, NodeRecord};
use crate::rf2::SctId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JournalRecord {
    Batch { batch_id: u64, nodes: Vec<NodeRecord>, edges: Vec<EdgeRecord> },
    RemoveEdges { ids: Vec<SctId> },
}

pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens `path` for appending and returns the records already in it.
    ///
    /// A damaged tail is truncated away so new records follow the last good one.
    pub fn open(path: &Path) -> io::Result<(Self, Vec<JournalRecord>)> {
        let (records, good_len) = if path.exists() { read_records(path)? } else { (Vec::new(), 0) };
        let file = OpenOptions::new().create(true).read(true).write(true).truncate(false).open(path)?;
        if file.metadata()?.len() != good_len {
            log::warn!("{}: dropping damaged journal tail after byte {good_len}", path.display());
            file.set_len(good_len)?;
        }
        let mut file = file;
        std::io::Seek::seek(&mut file, io::SeekFrom::End(0))?;
        Ok((Journal { path: path.to_path_buf(), file }, records))
    }

    pub fn append(&mut self, record: &JournalRecord) -> io::Result<()> {
        let payload = serde_json::to_vec(record).map_err(io::Error::other)?;
        let len = u32::try_from(payload.len()).map_err(|_| io::Error::other("journal record exceeds 4 GiB"))?;
        let mut frame = Vec::with_capacity(payload.len() + 8);
        frame.extend_from_slice(&len.to_le_bytes());
        frame.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        frame.extend_from_slice(&payload);
        self.file.write_all(&frame)?;
        self.file.flush()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Reads every intact record; returns them with the byte length they span.
pub fn read_records(path: &Path) -> io::Result<(Vec<JournalRecord>, u64)> {
    let mut input = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut good = 0u64;
    loop {
        let mut head = [0u8; 8];
        if read_full(&mut input, &mut head)? < 8 {
            break;
        }
        let len = u32::from_le_bytes(head[..4].try_into().expect("4 bytes")) as usize;
        let crc = u32::from_le_bytes(head[4..].try_into().expect("4 bytes"));
        let mut payload = vec![0u8; len];
        if read_full(&mut input, &mut payload)? < len || crc32fast::hash(&payload) != crc {
            break;
        }
        match serde_json::from_slice(&payload) {
            Ok(record) => records.push(record),
            Err(_) => break,
        }
        good += 8 + len as u64;
    }
    Ok((records, good))
}

fn read_full(input: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}
