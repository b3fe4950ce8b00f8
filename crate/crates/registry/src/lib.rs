//! Linked-data registry for Administrative Shells: registration with
//! validation, dereferenceable IRIs, a BGP query endpoint and the versioned
//! vocabulary.
//!
//! | route | |
//! |---|---|
//! | `GET /components` | JSON list of registered shells |
//! | `POST /components` | register a Turtle document |
//! | `GET /component/{local}`, `GET /{path}` | description of `base + local` |
//! | `GET /resource?iri=` | description of any IRI in the store |
//! | `POST /sparql` | SELECT as JSON, CONSTRUCT as Turtle |
//! | `GET /vocabulary` | vocabulary with `ETag` and `If-None-Match` support |

mod http;
mod store;

pub use http::{accepts_turtle, router, serve, TURTLE, VERSION_HEADER};
pub use store::{QueryError, RegisterError, Registered, Registry, ShellEntry, SnapshotError};
