//! Streaming JSONL input and canonical (sorted-key) JSONL output.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::marker::PhantomData;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{SampleGroup, SampleLine};

/// Groups contiguous sample lines by `instance_id`.
///
/// Blank lines are skipped. Line numbers in errors are 1-based.
pub struct GroupReader<R, T = f64> {
    lines: std::io::Lines<R>,
    line_no: usize,
    pending: Option<SampleGroup<T>>,
    seen: HashSet<String>,
    failed: bool,
    _scalar: PhantomData<T>,
}

pub fn read_groups<R: BufRead, T: Scalar>(reader: R) -> GroupReader<R, T> {
    GroupReader {
        lines: reader.lines(),
        line_no: 0,
        pending: None,
        seen: HashSet::new(),
        failed: false,
        _scalar: PhantomData,
    }
}

/// Reads every group eagerly.
pub fn read_all_groups<R: BufRead, T: Scalar>(reader: R) -> Result<Vec<SampleGroup<T>>> {
    read_groups(reader).collect()
}

impl<R: BufRead, T: Scalar> GroupReader<R, T> {
    fn fail(&mut self, err: Error) -> Option<Result<SampleGroup<T>>> {
        self.failed = true;
        Some(Err(err))
    }
}

impl<R: BufRead, T: Scalar> Iterator for GroupReader<R, T> {
    type Item = Result<SampleGroup<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.next() {
                None => return self.pending.take().map(Ok),
                Some(Err(source)) => {
                    let line = self.line_no + 1;
                    return self.fail(Error::Read { line, source });
                }
                Some(Ok(line)) => line,
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: SampleLine<T> = match serde_json::from_str(&line) {
                Ok(parsed) => parsed,
                Err(source) => {
                    let line = self.line_no;
                    return self.fail(Error::Record { line, source });
                }
            };
            match &mut self.pending {
                Some(group) if group.instance_id == parsed.instance_id => {
                    group.samples.push(parsed.sample);
                }
                _ => {
                    if !self.seen.insert(parsed.instance_id.clone()) {
                        let line = self.line_no;
                        return self.fail(Error::Grouping {
                            line,
                            instance_id: parsed.instance_id,
                        });
                    }
                    let fresh = SampleGroup::new(parsed.instance_id, vec![parsed.sample]);
                    if let Some(done) = self.pending.replace(fresh) {
                        return Some(Ok(done));
                    }
                }
            }
        }
    }
}

/// Writes one canonical JSON line per record and returns the number written.
///
/// Object keys are emitted in sorted order, so equal records always produce equal bytes.
pub fn write_records<I, S, W>(records: I, mut sink: W) -> Result<usize>
where
    I: IntoIterator<Item = S>,
    S: Serialize,
    W: Write,
{
    let mut count = 0;
    for (index, record) in records.into_iter().enumerate() {
        let line =
            to_canonical_line(&record).map_err(|source| Error::Serialize { index, source })?;
        sink.write_all(line.as_bytes())
            .map_err(|source| Error::Write { index, source })?;
        count += 1;
    }
    sink.flush().map_err(|source| Error::Write {
        index: count,
        source,
    })?;
    Ok(count)
}

/// Canonical single-line JSON with trailing newline.
pub fn to_canonical_line<S: Serialize>(record: &S) -> serde_json::Result<String> {
    // `Value` objects are BTreeMap-backed, which sorts keys recursively.
    let value = serde_json::to_value(record)?;
    let mut line = serde_json::to_string(&value)?;
    line.push('\n');
    Ok(line)
}

/// Writes every sample of every group as input-schema lines.
pub fn write_groups<W: Write, T: Scalar>(groups: &[SampleGroup<T>], sink: W) -> Result<usize> {
    write_records(groups.iter().flat_map(SampleGroup::lines), sink)
}
