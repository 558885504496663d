//! MIT binary annotation format (`.atr`).
//!
//! The stream is a sequence of little-endian 16-bit words. The high 6 bits
//! carry an annotation type code, the low 10 bits a time increment relative
//! to the previous annotation. Codes 59-63 are pseudo-annotations: SKIP
//! carries a 4-byte long interval that applies to the following annotation;
//! NUM, SUB, CHN and AUX modify the annotation that precedes them (NUM and
//! CHN persist for subsequent annotations). A zero word terminates the
//! stream.

use std::collections::BTreeSet;

use super::WfdbError;

const CODE_SKIP: u16 = 59;
const CODE_NUM: u16 = 60;
const CODE_SUB: u16 = 61;
const CODE_CHN: u16 = 62;
const CODE_AUX: u16 = 63;
/// Largest real annotation type code (ACMAX in the WFDB library).
const CODE_MAX: u16 = 49;

/// One parsed annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    /// Absolute sample index from the start of the record.
    pub sample_index: usize,
    /// Annotation type code (1 = normal beat, 5 = PVC, ...).
    pub type_code: u8,
    pub subtype: i32,
    pub channel: i32,
    pub num: i32,
    pub aux: Option<Vec<u8>>,
}

/// Annotation type codes that count as beats, per the WFDB beat-type
/// convention: codes 1-13 plus BBB (25), atrial escape (34) and paced
/// fusion (38).
pub fn default_beat_codes() -> BTreeSet<u8> {
    let mut set: BTreeSet<u8> = (1..=13).collect();
    set.insert(25);
    set.insert(34);
    set.insert(38);
    set
}

fn bad(offset: usize, reason: impl Into<String>) -> WfdbError {
    WfdbError::MalformedAnnotation {
        offset,
        reason: reason.into(),
    }
}

/// Parses a MIT annotation stream into absolute-time annotations.
///
/// The stream must end with the zero terminator word; running off the end is
/// an error, as is any undefined pseudo-annotation code.
pub fn read_annotations(bytes: &[u8]) -> Result<Vec<Annotation>, WfdbError> {
    let mut anns: Vec<Annotation> = Vec::new();
    let mut pos = 0usize;
    let mut time: i64 = 0;
    let mut pending_skip: i64 = 0;
    let mut current_chn: i32 = 0;
    let mut current_num: i32 = 0;

    let read_word = |pos: &mut usize| -> Result<u16, WfdbError> {
        let b = bytes
            .get(*pos..*pos + 2)
            .ok_or_else(|| bad(*pos, "stream ended without a terminator"))?;
        *pos += 2;
        Ok(u16::from(b[0]) | (u16::from(b[1]) << 8))
    };

    loop {
        let word_offset = pos;
        let word = read_word(&mut pos)?;
        let code = word >> 10;
        let field = word & 0x3FF;

        match code {
            0 => {
                if field != 0 {
                    return Err(bad(word_offset, "NOTQRS word with nonzero interval"));
                }
                break;
            }
            1..=CODE_MAX => {
                let previous = time;
                time += pending_skip + i64::from(field);
                pending_skip = 0;
                if time < 0 {
                    return Err(bad(word_offset, "annotation time went negative"));
                }
                if time < previous {
                    return Err(bad(word_offset, "annotation time went backwards"));
                }
                anns.push(Annotation {
                    sample_index: time as usize,
                    type_code: code as u8,
                    subtype: 0,
                    channel: current_chn,
                    num: current_num,
                    aux: None,
                });
            }
            CODE_SKIP => {
                if field != 0 {
                    return Err(bad(word_offset, "SKIP word with nonzero interval"));
                }
                let high = read_word(&mut pos)?;
                let low = read_word(&mut pos)?;
                let long = ((u32::from(high) << 16) | u32::from(low)) as i32;
                pending_skip += i64::from(long);
            }
            CODE_NUM => {
                current_num = i32::from(field);
                match anns.last_mut() {
                    Some(a) => a.num = current_num,
                    None => return Err(bad(word_offset, "NUM with no preceding annotation")),
                }
            }
            CODE_SUB => {
                // Subtype is a signed byte carried in the low bits.
                let sub = i32::from(field as u8 as i8);
                match anns.last_mut() {
                    Some(a) => a.subtype = sub,
                    None => return Err(bad(word_offset, "SUB with no preceding annotation")),
                }
            }
            CODE_CHN => {
                current_chn = i32::from(field);
                match anns.last_mut() {
                    Some(a) => a.channel = current_chn,
                    None => return Err(bad(word_offset, "CHN with no preceding annotation")),
                }
            }
            CODE_AUX => {
                let len = usize::from(field);
                let payload = bytes
                    .get(pos..pos + len)
                    .ok_or_else(|| bad(pos, "truncated AUX payload"))?
                    .to_vec();
                pos += len;
                if len % 2 == 1 {
                    // Odd-length aux strings are padded to a word boundary.
                    if pos >= bytes.len() {
                        return Err(bad(pos, "missing AUX pad byte"));
                    }
                    pos += 1;
                }
                match anns.last_mut() {
                    Some(a) => a.aux = Some(payload),
                    None => return Err(bad(word_offset, "AUX with no preceding annotation")),
                }
            }
            other => {
                return Err(bad(
                    word_offset,
                    format!("unknown pseudo-annotation code {other}"),
                ));
            }
        }
    }

    debug_assert!(anns.windows(2).all(|w| w[0].sample_index <= w[1].sample_index));
    Ok(anns)
}

/// Encodes annotations back into the MIT binary layout, the inverse of
/// [`read_annotations`]. Used to build on-disk fixtures and to round-trip
/// the parser in tests.
///
/// Annotations must be sorted by sample index; gaps wider than the 10-bit
/// interval field are expressed with SKIP words.
pub fn encode_annotations(anns: &[Annotation]) -> Result<Vec<u8>, WfdbError> {
    let mut out = Vec::with_capacity(anns.len() * 2 + 2);
    let mut time: i64 = 0;
    let mut current_chn: i32 = 0;
    let mut current_num: i32 = 0;

    let push_word = |word: u16, out: &mut Vec<u8>| {
        out.push((word & 0xFF) as u8);
        out.push((word >> 8) as u8);
    };

    for (i, ann) in anns.iter().enumerate() {
        if !(1..=u8::try_from(CODE_MAX).unwrap()).contains(&ann.type_code) {
            return Err(bad(i, format!("type code {} is not encodable", ann.type_code)));
        }
        let mut delta = i64::try_from(ann.sample_index).unwrap() - time;
        if delta < 0 {
            return Err(bad(i, "annotations are not sorted by sample index"));
        }
        if delta > 1023 {
            let long = u32::try_from(delta).map_err(|_| bad(i, "interval exceeds 32 bits"))?;
            push_word(u16::from(CODE_SKIP as u8) << 10, &mut out);
            push_word((long >> 16) as u16, &mut out);
            push_word((long & 0xFFFF) as u16, &mut out);
            delta = 0;
        }
        push_word((u16::from(ann.type_code) << 10) | (delta as u16 & 0x3FF), &mut out);
        time = i64::try_from(ann.sample_index).unwrap();

        if ann.subtype != 0 {
            push_word((CODE_SUB << 10) | (ann.subtype as u16 & 0x3FF), &mut out);
        }
        if ann.channel != current_chn {
            current_chn = ann.channel;
            push_word((CODE_CHN << 10) | (ann.channel as u16 & 0x3FF), &mut out);
        }
        if ann.num != current_num {
            current_num = ann.num;
            push_word((CODE_NUM << 10) | (ann.num as u16 & 0x3FF), &mut out);
        }
        if let Some(aux) = &ann.aux {
            if aux.len() > 0x3FF {
                return Err(bad(i, "AUX payload exceeds 1023 bytes"));
            }
            push_word((CODE_AUX << 10) | aux.len() as u16, &mut out);
            out.extend_from_slice(aux);
            if aux.len() % 2 == 1 {
                out.push(0);
            }
        }
    }

    push_word(0, &mut out);
    Ok(out)
}
