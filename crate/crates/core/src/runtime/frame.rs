//! Spike frame wire format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DPSN"
//! 4       1     version (1)
//! 5       2     sender rank, u16 LE
//! 7       4     step, u32 LE
//! 11      4     count, u32 LE
//! 15      4*n   source neuron ids, u32 LE
//! ```

use crate::error::FrameError;

pub const FRAME_MAGIC: [u8; 4] = *b"DPSN";
pub const FRAME_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeFrame {
    pub sender: u16,
    pub step: u32,
    pub spikes: Vec<u32>,
}

impl SpikeFrame {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 4 * self.spikes.len()
    }
}

pub fn encode_frame(sender: u16, step: u32, spikes: &[u32]) -> Vec<u8> {
    let count = u32::try_from(spikes.len()).expect("spike count exceeds u32");
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * spikes.len());
    out.extend_from_slice(&FRAME_MAGIC);
    out.push(FRAME_VERSION);
    out.extend_from_slice(&sender.to_le_bytes());
    out.extend_from_slice(&step.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for s in spikes {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Parsed header: `(sender, step, count)`.
pub fn decode_header(header: &[u8]) -> Result<(u16, u32, u32), FrameError> {
    if header.len() < HEADER_LEN {
        return Err(FrameError::Truncated {
            declared: HEADER_LEN,
            actual: header.len(),
        });
    }
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != FRAME_MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    if header[4] != FRAME_VERSION {
        return Err(FrameError::UnsupportedVersion(header[4]));
    }
    let sender = u16::from_le_bytes(header[5..7].try_into().unwrap());
    let step = u32::from_le_bytes(header[7..11].try_into().unwrap());
    let count = u32::from_le_bytes(header[11..15].try_into().unwrap());
    Ok((sender, step, count))
}

pub fn decode_frame(bytes: &[u8]) -> Result<SpikeFrame, FrameError> {
    let (sender, step, count) = decode_header(bytes)?;
    let declared = HEADER_LEN + 4 * count as usize;
    if bytes.len() < declared {
        return Err(FrameError::Truncated {
            declared,
            actual: bytes.len(),
        });
    }
    if bytes.len() > declared {
        return Err(FrameError::TrailingBytes {
            extra: bytes.len() - declared,
        });
    }
    let spikes = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(SpikeFrame { sender, step, spikes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_frame_is_header_only() {
        let bytes = encode_frame(3, 9, &[]);
        assert_eq!(bytes.len(), 15);
        assert_eq!(bytes, [b'D', b'P', b'S', b'N', 1, 3, 0, 9, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn layout_is_little_endian() {
        let bytes = encode_frame(0x0102, 0x0A0B0C0D, &[0x11223344]);
        assert_eq!(&bytes[5..7], &[0x02, 0x01]);
        assert_eq!(&bytes[7..11], &[0x0D, 0x0C, 0x0B, 0x0A]);
        assert_eq!(&bytes[11..15], &[1, 0, 0, 0]);
        assert_eq!(&bytes[15..], &[0x44, 0x33, 0x22, 0x11]);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = encode_frame(1, 2, &[5, 6]);
        bytes.truncate(HEADER_LEN + 4);
        assert_eq!(
            decode_frame(&bytes),
            Err(FrameError::Truncated {
                declared: 23,
                actual: 19
            })
        );
        let mut bad = encode_frame(1, 2, &[]);
        bad[0] = b'X';
        assert!(matches!(decode_frame(&bad), Err(FrameError::BadMagic(_))));
        let mut bad = encode_frame(1, 2, &[]);
        bad[4] = 2;
        assert_eq!(decode_frame(&bad), Err(FrameError::UnsupportedVersion(2)));
        let mut long = encode_frame(1, 2, &[7]);
        long.push(0);
        assert_eq!(decode_frame(&long), Err(FrameError::TrailingBytes { extra: 1 }));
        assert!(decode_frame(b"DP").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(sender: u16, step: u32, spikes in prop::collection::vec(any::<u32>(), 0..64)) {
            let bytes = encode_frame(sender, step, &spikes);
            prop_assert_eq!(bytes.len(), HEADER_LEN + 4 * spikes.len());
            let frame = decode_frame(&bytes).unwrap();
            prop_assert_eq!(frame, SpikeFrame { sender, step, spikes });
        }
    }
}
