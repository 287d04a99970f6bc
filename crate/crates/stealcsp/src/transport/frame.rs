//! Bit-exact wire frame: a 4-byte little-endian length counting everything
//! after the length field, 2-byte source team, 2-byte destination team, a
//! 1-byte message kind, then the payload.
//!
//! Kinds: REQUEST_WORK=1, SUPPLY_WORK=2, NO_WORK=3, SOLUTION=4, TEAM_IDLE=5,
//! STOP=6, TERMINATE=7. Payloads: a 2-byte little-endian team id for
//! REQUEST_WORK and TEAM_IDLE; an encoded store for SUPPLY_WORK; a tuple
//! (2-byte little-endian length then one byte per value) for SOLUTION;
//! empty otherwise.

use super::{Envelope, NodeId, ProtocolMessage};
use crate::store::{CodecError, Store};

/// Largest frame body this implementation accepts: a store of 65535
/// variables plus the header, rounded up.
pub const MAX_BODY: u32 = 1 << 20;

pub const HEADER_LEN: usize = 4;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame truncated: need {need} bytes, got {got}")]
    Truncated { need: usize, got: usize },
    #[error("unknown message kind {0}")]
    UnknownKind(u8),
    #[error("payload length {len} invalid for kind {kind}")]
    PayloadMismatch { kind: u8, len: usize },
    #[error("frame body of {0} bytes exceeds the {MAX_BODY} byte cap")]
    BodyTooLong(u32),
    #[error("store payload: {0}")]
    Store(#[from] CodecError),
}

pub fn encode(env: &Envelope) -> Vec<u8> {
    let payload: Vec<u8> = match &env.msg {
        ProtocolMessage::RequestWork { from } => from.to_le_bytes().to_vec(),
        ProtocolMessage::SupplyWork { store } => store.encode(),
        ProtocolMessage::NoWork | ProtocolMessage::Stop | ProtocolMessage::Terminate => vec![],
        ProtocolMessage::Solution { tuple } => {
            let mut p = Vec::with_capacity(2 + tuple.len());
            p.extend_from_slice(&(tuple.len() as u16).to_le_bytes());
            p.extend_from_slice(tuple);
            p
        }
        ProtocolMessage::TeamIdle { team } => team.to_le_bytes().to_vec(),
    };
    let body_len = 2 + 2 + 1 + payload.len();
    let mut out = Vec::with_capacity(HEADER_LEN + body_len);
    out.extend_from_slice(&(body_len as u32).to_le_bytes());
    out.extend_from_slice(&env.src.to_le_bytes());
    out.extend_from_slice(&env.dst.to_le_bytes());
    out.push(env.msg.kind() as u8);
    out.extend_from_slice(&payload);
    out
}

/// Decode one complete frame (length prefix included). The input must be
/// exactly one frame.
pub fn decode(bytes: &[u8]) -> Result<Envelope, FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::Truncated { need: HEADER_LEN, got: bytes.len() });
    }
    let body_len = u32::from_le_bytes(bytes[..4].try_into().unwrap());
    if body_len > MAX_BODY {
        return Err(FrameError::BodyTooLong(body_len));
    }
    let body = &bytes[4..];
    if body.len() != body_len as usize {
        return Err(FrameError::Truncated { need: HEADER_LEN + body_len as usize, got: bytes.len() });
    }
    decode_body(body)
}

/// Decode a frame body (everything after the length prefix).
pub fn decode_body(body: &[u8]) -> Result<Envelope, FrameError> {
    if body.len() < 5 {
        return Err(FrameError::Truncated { need: 5, got: body.len() });
    }
    let src = NodeId::from_le_bytes(body[0..2].try_into().unwrap());
    let dst = NodeId::from_le_bytes(body[2..4].try_into().unwrap());
    let kind = body[4];
    let payload = &body[5..];
    let team_id_payload = |payload: &[u8]| -> Result<NodeId, FrameError> {
        if payload.len() != 2 {
            return Err(FrameError::PayloadMismatch { kind, len: payload.len() });
        }
        Ok(NodeId::from_le_bytes(payload.try_into().unwrap()))
    };
    let msg = match kind {
        1 => ProtocolMessage::RequestWork { from: team_id_payload(payload)? },
        2 => ProtocolMessage::SupplyWork { store: Store::decode(payload)? },
        3 | 6 | 7 => {
            if !payload.is_empty() {
                return Err(FrameError::PayloadMismatch { kind, len: payload.len() });
            }
            match kind {
                3 => ProtocolMessage::NoWork,
                6 => ProtocolMessage::Stop,
                _ => ProtocolMessage::Terminate,
            }
        }
        4 => {
            if payload.len() < 2 {
                return Err(FrameError::PayloadMismatch { kind, len: payload.len() });
            }
            let n = u16::from_le_bytes(payload[..2].try_into().unwrap()) as usize;
            if payload.len() != 2 + n {
                return Err(FrameError::PayloadMismatch { kind, len: payload.len() });
            }
            ProtocolMessage::Solution { tuple: payload[2..].to_vec() }
        }
        5 => ProtocolMessage::TeamIdle { team: team_id_payload(payload)? },
        other => return Err(FrameError::UnknownKind(other)),
    };
    Ok(Envelope { src, dst, msg })
}

/// Read one frame from a byte stream.
pub fn read_from(reader: &mut impl std::io::Read) -> Result<Envelope, super::TransportError> {
    let mut header = [0u8; HEADER_LEN];
    reader.read_exact(&mut header)?;
    let body_len = u32::from_le_bytes(header);
    if body_len > MAX_BODY {
        return Err(FrameError::BodyTooLong(body_len).into());
    }
    let mut body = vec![0u8; body_len as usize];
    reader.read_exact(&mut body)?;
    Ok(decode_body(&body)?)
}
