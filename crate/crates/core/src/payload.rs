//! The ESH1 payload format: record serialization, four-way block split,
//! keyed keystream obfuscation, quadrant permutation and the integrity header.
//!
//! The keystream cipher is a fixed, bit-exact obfuscation layer. It is not a
//! cryptographic primitive and offers no authenticity beyond the CRCs.
//!
//! ```text
//! header (34 bytes, big-endian integers)
//!   0..4   magic "ESH1"
//!   4      version = 1
//!   5      flags (bit 0: payload present)
//!   6..10  total_len      serialized record length in bytes
//!   10..26 block_lens[4]  per-block lengths, sum = total_len
//!   26..30 record_crc     CRC-32 of the plaintext serialized record
//!   30..34 header_crc     CRC-32 of bytes 0..30
//!
//! record (TLV)
//!   u16 field count, then per field: u8 tag, u16 length, bytes
//!   tags: 1 class, 2 keyword, 3 description, 4 attribute key, 5 attribute value
//!   order: class, keywords*, description, (key, value)*
//! ```

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ESH1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 34;
pub const HEADER_BITS: usize = HEADER_LEN * 8;
pub const MAX_CLASS_LEN: usize = 64;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const XORSHIFT_STAR_MUL: u64 = 0x2545_F491_4F6C_DD1D;
const STEGO_WHITENING_DOMAIN: &[u8] = b"esh1-stego-whitening\0";

const TAG_CLASS: u8 = 1;
const TAG_KEYWORD: u8 = 2;
const TAG_DESCRIPTION: u8 = 3;
const TAG_ATTR_KEY: u8 = 4;
const TAG_ATTR_VALUE: u8 = 5;

/// Semantic description of an image: what gets hidden inside it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SemanticRecord {
    pub class_label: String,
    pub keywords: Vec<String>,
    pub description: String,
    pub attributes: Vec<(String, String)>,
}

impl SemanticRecord {
    pub fn new(class_label: impl Into<String>) -> Self {
        Self { class_label: class_label.into(), ..Default::default() }
    }

    pub fn with_keywords<I, S>(mut self, keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.keywords.extend(keywords.into_iter().map(Into::into));
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.push((key.into(), value.into()));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_label.is_empty() {
            return Err(Error::InvalidRecord("class label is empty".into()));
        }
        if self.class_label.len() > MAX_CLASS_LEN {
            return Err(Error::InvalidRecord(format!(
                "class label is {} bytes, limit is {MAX_CLASS_LEN}",
                self.class_label.len()
            )));
        }
        Ok(())
    }
}

/// Passphrase for the keystream obfuscation.
#[derive(Clone, PartialEq, Eq)]
pub struct EncryptionKey(Vec<u8>);

/// Passphrase selecting the block-to-quadrant pattern and bit whitening.
#[derive(Clone, PartialEq, Eq)]
pub struct StegoKey(Vec<u8>);

macro_rules! key_impl {
    ($t:ident) => {
        impl $t {
            pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self> {
                let bytes = bytes.into();
                if bytes.is_empty() {
                    return Err(Error::InvalidConfig(concat!(stringify!($t), " must not be empty").into()));
                }
                Ok(Self(bytes))
            }

            pub fn as_bytes(&self) -> &[u8] {
                &self.0
            }
        }

        impl std::fmt::Debug for $t {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, concat!(stringify!($t), "(<{} bytes>)"), self.0.len())
            }
        }
    };
}

key_impl!(EncryptionKey);
key_impl!(StegoKey);

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

fn write_field(out: &mut Vec<u8>, tag: u8, value: &str) -> Result<()> {
    let len = u16::try_from(value.len()).map_err(|_| Error::FieldTooLong { len: value.len() })?;
    out.push(tag);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(value.as_bytes());
    Ok(())
}

pub fn serialize_record(rec: &SemanticRecord) -> Result<Vec<u8>> {
    rec.validate()?;
    let count = 2 + rec.keywords.len() + 2 * rec.attributes.len();
    let count = u16::try_from(count).map_err(|_| Error::InvalidRecord("too many fields".into()))?;
    let mut out = Vec::new();
    out.extend_from_slice(&count.to_be_bytes());
    write_field(&mut out, TAG_CLASS, &rec.class_label)?;
    for kw in &rec.keywords {
        write_field(&mut out, TAG_KEYWORD, kw)?;
    }
    write_field(&mut out, TAG_DESCRIPTION, &rec.description)?;
    for (k, v) in &rec.attributes {
        write_field(&mut out, TAG_ATTR_KEY, k)?;
        write_field(&mut out, TAG_ATTR_VALUE, v)?;
    }
    Ok(out)
}

struct FieldReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> FieldReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| Error::InvalidRecord("truncated record".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn field(&mut self) -> Result<(u8, String)> {
        let tag = self.take(1)?[0];
        let len = u16::from_be_bytes(self.take(2)?.try_into().unwrap()) as usize;
        let text = std::str::from_utf8(self.take(len)?)
            .map_err(|_| Error::InvalidRecord("field is not valid UTF-8".into()))?;
        Ok((tag, text.to_owned()))
    }
}

pub fn deserialize_record(data: &[u8]) -> Result<SemanticRecord> {
    let mut r = FieldReader { data, pos: 0 };
    let count = u16::from_be_bytes(r.take(2)?.try_into().unwrap()) as usize;
    let mut fields = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        fields.push(r.field()?);
    }
    if r.pos != data.len() {
        return Err(Error::InvalidRecord("trailing bytes after last field".into()));
    }

    let unexpected = |tag: u8| Error::InvalidRecord(format!("unexpected field tag {tag}"));
    let mut it = fields.into_iter().peekable();
    let mut rec = match it.next() {
        Some((TAG_CLASS, class)) => SemanticRecord::new(class),
        Some((tag, _)) => return Err(unexpected(tag)),
        None => return Err(Error::InvalidRecord("record has no fields".into())),
    };
    while let Some((_, kw)) = it.next_if(|(t, _)| *t == TAG_KEYWORD) {
        rec.keywords.push(kw);
    }
    match it.next() {
        Some((TAG_DESCRIPTION, d)) => rec.description = d,
        Some((tag, _)) => return Err(unexpected(tag)),
        None => return Err(Error::InvalidRecord("missing description field".into())),
    }
    while let Some((tag, key)) = it.next() {
        if tag != TAG_ATTR_KEY {
            return Err(unexpected(tag));
        }
        match it.next() {
            Some((TAG_ATTR_VALUE, value)) => rec.attributes.push((key, value)),
            _ => return Err(Error::InvalidRecord("attribute key without value".into())),
        }
    }
    rec.validate()?;
    Ok(rec)
}

/// Contiguous quarters of `data`; block `i` covers `[i*q, min((i+1)*q, n))` with `q = ceil(n/4)`.
pub fn split_blocks(data: &[u8]) -> [Vec<u8>; 4] {
    let q = data.len().div_ceil(4);
    std::array::from_fn(|i| {
        let start = (i * q).min(data.len());
        let end = ((i + 1) * q).min(data.len());
        data[start..end].to_vec()
    })
}

/// xorshift64* byte generator seeded from a passphrase and a block index.
#[derive(Debug, Clone)]
pub struct Keystream {
    state: u64,
}

impl Keystream {
    pub fn new(key_bytes: &[u8], block_index: usize) -> Self {
        let mut state = fnv1a64(key_bytes) ^ (block_index as u64 + 1).wrapping_mul(GOLDEN_GAMMA);
        if state == 0 {
            state = GOLDEN_GAMMA;
        }
        Self { state }
    }

    pub fn next_byte(&mut self) -> u8 {
        let mut s = self.state;
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        self.state = s;
        (s.wrapping_mul(XORSHIFT_STAR_MUL) >> 56) as u8
    }
}

impl Iterator for Keystream {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        Some(self.next_byte())
    }
}

pub fn keystream(key: &EncryptionKey, block_index: usize, n: usize) -> Vec<u8> {
    Keystream::new(key.as_bytes(), block_index).take(n).collect()
}

fn rotation(block_index: usize) -> u32 {
    ((block_index + 1) % 8) as u32
}

pub fn encrypt_block(block: &[u8], key: &EncryptionKey, block_index: usize) -> Vec<u8> {
    let r = rotation(block_index);
    block.iter().zip(Keystream::new(key.as_bytes(), block_index)).map(|(b, k)| (b ^ k).rotate_left(r)).collect()
}

pub fn decrypt_block(block: &[u8], key: &EncryptionKey, block_index: usize) -> Vec<u8> {
    let r = rotation(block_index);
    block.iter().zip(Keystream::new(key.as_bytes(), block_index)).map(|(c, k)| c.rotate_right(r) ^ k).collect()
}

/// XOR mask derived from the stego key, applied to each embedded block.
/// Self-inverse.
pub fn whiten_block(block: &mut [u8], key: &StegoKey, block_index: usize) {
    let mut seed = Vec::with_capacity(STEGO_WHITENING_DOMAIN.len() + key.as_bytes().len());
    seed.extend_from_slice(STEGO_WHITENING_DOMAIN);
    seed.extend_from_slice(key.as_bytes());
    for (b, k) in block.iter_mut().zip(Keystream::new(&seed, block_index)) {
        *b ^= k;
    }
}

/// The `index`-th permutation of `(0, 1, 2, 3)` in lexicographic order (`index < 24`).
pub fn nth_permutation(index: usize) -> [usize; 4] {
    assert!(index < 24, "permutation index out of range");
    let mut pool = vec![0usize, 1, 2, 3];
    let mut rest = index;
    let mut out = [0usize; 4];
    for (slot, radix) in out.iter_mut().zip([6usize, 2, 1, 1]) {
        *slot = pool.remove(rest / radix);
        rest %= radix;
    }
    out
}

/// Message block `i` goes into image quadrant `perm[i]`.
pub fn quadrant_permutation(key: &StegoKey) -> [usize; 4] {
    nth_permutation((fnv1a64(key.as_bytes()) % 24) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadHeader {
    pub flags: u8,
    pub total_len: u32,
    pub block_lens: [u32; 4],
    pub record_crc: u32,
}

impl PayloadHeader {
    pub const FLAG_PRESENT: u8 = 0x01;

    pub fn for_record(serialized: &[u8], blocks: &[Vec<u8>; 4]) -> Self {
        Self {
            flags: Self::FLAG_PRESENT,
            total_len: serialized.len() as u32,
            block_lens: blocks.each_ref().map(|b| b.len() as u32),
            record_crc: crc32(serialized),
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = self.flags;
        out[6..10].copy_from_slice(&self.total_len.to_be_bytes());
        for (i, len) in self.block_lens.iter().enumerate() {
            out[10 + 4 * i..14 + 4 * i].copy_from_slice(&len.to_be_bytes());
        }
        out[26..30].copy_from_slice(&self.record_crc.to_be_bytes());
        let hcrc = crc32(&out[..30]);
        out[30..34].copy_from_slice(&hcrc.to_be_bytes());
        out
    }

    /// `NoPayload` on wrong magic/version, `HeaderCorrupt` on CRC or length inconsistency.
    pub fn parse(bytes: &[u8; HEADER_LEN]) -> Result<Self> {
        if bytes[0..4] != MAGIC || bytes[4] != VERSION {
            return Err(Error::NoPayload);
        }
        let be = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
        if be(30) != crc32(&bytes[..30]) {
            return Err(Error::HeaderCorrupt);
        }
        let header = Self {
            flags: bytes[5],
            total_len: be(6),
            block_lens: std::array::from_fn(|i| be(10 + 4 * i)),
            record_crc: be(26),
        };
        let sum: u64 = header.block_lens.iter().map(|&l| l as u64).sum();
        if sum != header.total_len as u64 {
            return Err(Error::HeaderCorrupt);
        }
        if header.flags & Self::FLAG_PRESENT == 0 {
            return Err(Error::NoPayload);
        }
        Ok(header)
    }
}

/// Serialize, split, encrypt and whiten; returns the header and the four embeddable blocks.
pub fn seal(rec: &SemanticRecord, ek: &EncryptionKey, sk: &StegoKey) -> Result<(PayloadHeader, [Vec<u8>; 4])> {
    let serialized = serialize_record(rec)?;
    let blocks = split_blocks(&serialized);
    let header = PayloadHeader::for_record(&serialized, &blocks);
    let mut sealed = blocks;
    for (i, b) in sealed.iter_mut().enumerate() {
        *b = encrypt_block(b, ek, i);
        whiten_block(b, sk, i);
    }
    Ok((header, sealed))
}

/// Inverse of [`seal`]; any key or bit mismatch surfaces as `IntegrityFailure`.
pub fn open(
    header: &PayloadHeader,
    mut blocks: [Vec<u8>; 4],
    ek: &EncryptionKey,
    sk: &StegoKey,
) -> Result<SemanticRecord> {
    let mut plain = Vec::with_capacity(header.total_len as usize);
    for (i, b) in blocks.iter_mut().enumerate() {
        whiten_block(b, sk, i);
        plain.extend_from_slice(&decrypt_block(b, ek, i));
    }
    if crc32(&plain) != header.record_crc {
        return Err(Error::IntegrityFailure);
    }
    deserialize_record(&plain).map_err(|_| Error::IntegrityFailure)
}
