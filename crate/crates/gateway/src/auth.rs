//! Static bearer-token authentication and role checks.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use payroll_core::EmployeeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Role {
    Admin,
    Employee(EmployeeId),
}

impl Role {
    /// Short label for request logs.
    pub fn label(&self) -> &'static str {
        match self {
            Role::Admin => "admin",
            Role::Employee(_) => "employee",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Admin => f.write_str("admin"),
            Role::Employee(id) => write!(f, "employee:{id}"),
        }
    }
}

impl FromStr for Role {
    type Err = String;

    /// `admin` or `employee:<id>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "admin" => Ok(Role::Admin),
            Some(("employee", id)) => {
                EmployeeId::new(id).map(Role::Employee).map_err(|e| e.to_string())
            }
            _ => Err(format!("unknown role {s:?}; expected admin or employee:<id>")),
        }
    }
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Principal {
    pub role: Role,
}

impl Principal {
    pub fn is_admin(&self) -> bool {
        self.role == Role::Admin
    }

    pub fn require_admin(&self) -> Result<(), AuthError> {
        if self.is_admin() {
            Ok(())
        } else {
            Err(AuthError::Forbidden)
        }
    }

    /// Admins see everyone; employees only themselves.
    pub fn may_read_employee(&self, id: &EmployeeId) -> Result<(), AuthError> {
        match &self.role {
            Role::Admin => Ok(()),
            Role::Employee(own) if own == id => Ok(()),
            Role::Employee(_) => Err(AuthError::Forbidden),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("missing or unknown bearer token")]
    Unauthenticated,
    #[error("not allowed for this principal")]
    Forbidden,
}

impl AuthError {
    pub fn code(&self) -> &'static str {
        match self {
            AuthError::Unauthenticated => "Unauthenticated",
            AuthError::Forbidden => "Forbidden",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TokenTable {
    tokens: HashMap<String, Role>,
}

impl TokenTable {
    pub fn new(tokens: impl IntoIterator<Item = (String, Role)>) -> Self {
        TokenTable { tokens: tokens.into_iter().collect() }
    }

    pub fn authenticate(&self, token: &str) -> Result<Principal, AuthError> {
        self.tokens
            .get(token)
            .map(|role| Principal { role: role.clone() })
            .ok_or(AuthError::Unauthenticated)
    }

    /// Parses an `Authorization` header value.
    pub fn authenticate_header(&self, header: Option<&str>) -> Result<Principal, AuthError> {
        let token = header
            .and_then(|h| h.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or(AuthError::Unauthenticated)?;
        self.authenticate(token)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TokenTable {
        TokenTable::new([
            ("root".to_string(), Role::Admin),
            ("e1tok".to_string(), "employee:e1".parse().unwrap()),
        ])
    }

    #[test]
    fn tokens_map_to_roles() {
        let t = table();
        assert!(t.authenticate("root").unwrap().is_admin());
        assert_eq!(t.authenticate("nope"), Err(AuthError::Unauthenticated));
        assert_eq!(t.authenticate_header(Some("Bearer root")).unwrap().role, Role::Admin);
        assert_eq!(t.authenticate_header(Some("root")), Err(AuthError::Unauthenticated));
        assert_eq!(t.authenticate_header(None), Err(AuthError::Unauthenticated));
    }

    #[test]
    fn employees_read_only_themselves() {
        let p = table().authenticate("e1tok").unwrap();
        let e1 = EmployeeId::new("e1").unwrap();
        let e2 = EmployeeId::new("e2").unwrap();
        assert!(p.may_read_employee(&e1).is_ok());
        assert_eq!(p.may_read_employee(&e2), Err(AuthError::Forbidden));
        assert_eq!(p.require_admin(), Err(AuthError::Forbidden));
    }

    #[test]
    fn role_parsing() {
        assert_eq!("admin".parse::<Role>(), Ok(Role::Admin));
        assert!("employee:".parse::<Role>().is_err());
        assert!("boss".parse::<Role>().is_err());
        assert_eq!("employee:e1".parse::<Role>().unwrap().to_string(), "employee:e1");
    }
}
