//! Messages exchanged inside established channels, and the wire error codes.

use std::fmt;

use qore_core::token::TokenError;
use serde::{Deserialize, Serialize};

/// Registry entry for one NF instance. The certificate chain travels as the
/// text container form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NfProfile {
    pub nf_instance_id: String,
    pub nf_type: String,
    pub services: Vec<String>,
    pub chain_pem: String,
    pub endpoint: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    Register {
        profile: NfProfile,
    },
    RegisterAck {
        nf_instance_id: String,
    },
    TokenRequest {
        target_nf_type: String,
        scope: Vec<String>,
    },
    TokenResponse {
        token: String,
    },
    /// An empty `token` is a request without credentials.
    ServiceRequest {
        token: String,
        service: String,
        payload: String,
    },
    ServiceResponse {
        status: u16,
        payload: String,
    },
    Error {
        status: u16,
        code: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceMessage {
    pub correlation_id: u64,
    #[serde(flatten)]
    pub body: Body,
}

impl ServiceMessage {
    pub fn new(correlation_id: u64, body: Body) -> Self {
        Self { correlation_id, body }
    }

    pub fn error(correlation_id: u64, code: WireCode) -> Self {
        Self::new(correlation_id, Body::Error { status: code.status, code: code.code.to_string() })
    }
}

/// HTTP-like status plus a stable short code, rendered `401-expired`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WireCode {
    pub status: u16,
    pub code: &'static str,
}

impl WireCode {
    pub const MISSING_TOKEN: Self = Self { status: 401, code: "missing-token" };
    pub const UNREGISTERED_CONSUMER: Self = Self { status: 403, code: "unregistered-consumer" };
    pub const SCOPE_DENIED: Self = Self { status: 403, code: "scope-denied" };
    pub const IDENTITY_MISMATCH: Self = Self { status: 403, code: "identity-mismatch" };
    pub const DUPLICATE_INSTANCE: Self = Self { status: 409, code: "duplicate-instance" };
    pub const UNKNOWN_SERVICE: Self = Self { status: 404, code: "unknown-service" };
    pub const BAD_REQUEST: Self = Self { status: 400, code: "bad-request" };
    pub const INTERNAL: Self = Self { status: 500, code: "internal" };

    /// Every validation failure gets its own code.
    pub fn from_token_error(e: &TokenError) -> Self {
        let (status, code) = match e {
            TokenError::Malformed(_) => (401, "malformed-token"),
            TokenError::UnknownKid(_) => (401, "unknown-kid"),
            TokenError::UnsupportedAlg(_) => (401, "unsupported-alg"),
            TokenError::BadSignature | TokenError::Crypto(_) => (401, "bad-signature"),
            TokenError::Expired => (401, "expired"),
            TokenError::InvalidLifetime(_) => (401, "invalid-lifetime"),
            TokenError::Revoked => (403, "revoked"),
            TokenError::AudienceMismatch => (403, "audience"),
            TokenError::ScopeMismatch => (403, "scope"),
            TokenError::SubjectMismatch => (403, "subject"),
            TokenError::UntrustedRevocationList | TokenError::DuplicateKid(_) => (500, "key-material"),
        };
        Self { status, code }
    }
}

impl fmt::Display for WireCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.status, self.code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_errors_map_to_distinct_codes() {
        let errs = [
            TokenError::Malformed("x"),
            TokenError::UnknownKid("k".into()),
            TokenError::BadSignature,
            TokenError::Expired,
            TokenError::Revoked,
            TokenError::AudienceMismatch,
            TokenError::ScopeMismatch,
            TokenError::SubjectMismatch,
        ];
        let codes: std::collections::BTreeSet<String> =
            errs.iter().map(|e| WireCode::from_token_error(e).to_string()).collect();
        assert_eq!(codes.len(), errs.len());
        assert!(codes.contains("401-expired") && codes.contains("403-audience") && codes.contains("403-revoked"));
    }

    #[test]
    fn message_json_is_flat() {
        let m = ServiceMessage::new(7, Body::TokenResponse { token: "t".into() });
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(j, r#"{"correlation_id":7,"kind":"token_response","token":"t"}"#);
        assert_eq!(serde_json::from_str::<ServiceMessage>(&j).unwrap(), m);
    }
}
