//! Synthetic SRS documents and scripted model replies. Used to build the
//! shipped cassettes, and by tests and benchmarks.

use std::path::Path;
use std::sync::Arc;

use crate::case::TestCaseDesign;
use crate::corpus::parse_srs;
use crate::llm::{
    CompletionRequest, Gateway, ProviderConfig, ScriptedTransport, SessionFactory, TransportError,
};
use crate::prompt::render_table;
use crate::redundancy::flag_redundancies;
use crate::suite::{fixpoint_generate, Approach, FixpointConfig, SuiteUnion};

pub const FAMILIARIZATION_ACK: &str =
    "Understood. I have read the SRS and will refer to it when answering the upcoming prompts.";

const VERBS: [&str; 12] = [
    "submit", "approve", "review", "cancel", "schedule", "upload", "search", "assign", "export",
    "archive", "notify", "verify",
];
const NOUNS: [&str; 12] = [
    "request",
    "report",
    "profile",
    "appointment",
    "document",
    "invoice",
    "record",
    "ticket",
    "session",
    "message",
    "schedule",
    "certificate",
];

/// A markdown SRS with an actor list and `use_case_count` use-case sections.
pub fn synthetic_srs(title: &str, actors: &[&str], use_case_count: usize) -> String {
    let mut out = format!(
        "# {title}\n\nThis document describes the functional requirements of the {title}.\n\n"
    );
    if !actors.is_empty() {
        out.push_str("## Actors\n");
        for a in actors {
            out.push_str(&format!("- {a}\n"));
        }
        out.push('\n');
    }
    for i in 0..use_case_count {
        let verb = VERBS[i % VERBS.len()];
        let noun = NOUNS[(i * 5 + i / VERBS.len()) % NOUNS.len()];
        let actor = if actors.is_empty() {
            "User"
        } else {
            actors[i % actors.len()]
        };
        out.push_str(&format!(
            "## Use Case: {verb_cap} {noun} {n} [UC-{n}]\nActor: {actor}\n\
             The {actor} opens the {noun} page and chooses to {verb} a {noun}.\n\
             The system validates the input and stores the {noun}.\n\
             If validation fails the system shows an error and keeps the form.\n\n",
            verb_cap = capitalize(verb),
            n = i + 1,
        ));
    }
    out
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Distinct cases for use case `uc` (1-based); `k` picks the variant.
pub fn synthetic_case(uc: usize, k: usize) -> TestCaseDesign {
    let verb = VERBS[(uc + k) % VERBS.len()];
    let noun = NOUNS[(uc * 7 + k) % NOUNS.len()];
    TestCaseDesign::new(
        format!("uc{uc} variant{k} {verb} {noun} succeeds"),
        format!("open uc{uc} form step{k} and {verb} the {noun}"),
        format!("uc{uc} outcome{k} {noun} is saved"),
        "",
    )
}

/// A model reply carrying `cases` as a four-column table.
pub fn table_reply(cases: &[TestCaseDesign]) -> String {
    format!(
        "Here are the test case designs:\n\n{}\nLet me know if you need more.\n",
        render_table(cases)
    )
}

/// Chain-mode replies: `attempts[a][u]` are the rows returned for use case
/// `u + 1` in attempt `a + 1`. Calls cycle through the familiarization
/// prompt and the use-case prompts of each attempt in order.
pub fn chain_script(attempts: Vec<Vec<Vec<TestCaseDesign>>>) -> ScriptedTransport {
    let replies: Vec<String> = attempts
        .iter()
        .flat_map(|a| {
            std::iter::once(FAMILIARIZATION_ACK.to_string())
                .chain(a.iter().map(|uc| table_reply(uc)))
        })
        .collect();
    ScriptedTransport::replies(replies)
}

/// Single-mode replies: one table per attempt.
pub fn single_script(attempts: Vec<Vec<TestCaseDesign>>) -> ScriptedTransport {
    ScriptedTransport::replies(attempts.iter().map(|a| table_reply(a)).collect::<Vec<_>>())
}

/// Replies to the familiarization prompt and then with `reply` once.
pub fn redundancy_script(reply: impl Into<String>) -> ScriptedTransport {
    let reply = reply.into();
    ScriptedTransport::from_fn(move |_req: &CompletionRequest, n| match n {
        0 => Ok(FAMILIARIZATION_ACK.to_string()),
        1 => Ok(reply.clone()),
        _ => Err(TransportError::fatal("redundancy script exhausted")),
    })
}

/// A two-use-case booking system whose three generation attempts yield 5,
/// then 7 rows of which 4 repeat earlier ones, then 8 rows that all repeat.
pub mod demo {
    use super::*;

    pub const PROJECT: &str = "demo";

    pub const SRS: &str = "# Library Room Booking System

The Library Room Booking System lets students reserve group study rooms and lets librarians manage bookings.

## Actors
- Student
- Librarian
- Administrator

## Use Case: Log In [UC-1]
Actor: Student
The student enters a registered email address and password on the login page.
The system checks the credentials and shows the dashboard when they are valid.
After five failed attempts in a row the account is locked and the student is emailed.
A student who forgot the password can request a reset link by email.

## Use Case: Book Room [UC-2]
Actor: Student
The student picks a free room and a time slot within opening hours and confirms the booking.
The system rejects slots that are already reserved or fall outside opening hours.
A confirmation is shown and emailed after a successful booking.
A librarian can cancel any booking, and the student is notified of the cancellation.
";

    fn tc(c: &str, i: &str, e: &str, comments: &str) -> TestCaseDesign {
        TestCaseDesign::new(c, i, e, comments)
    }

    fn login_ok() -> TestCaseDesign {
        tc(
            "User can log in with valid credentials",
            "Enter registered email and correct password, click Login",
            "Dashboard is displayed for the user",
            "Happy path",
        )
    }

    fn login_bad_password() -> TestCaseDesign {
        tc(
            "Login fails with an incorrect password",
            "Enter registered email and wrong password, click Login",
            "Error message invalid credentials is shown",
            "",
        )
    }

    fn lockout() -> TestCaseDesign {
        tc(
            "Account locks after five failed logins in a row",
            "Enter a wrong password five consecutive times",
            "Account is locked and a lock notice is emailed",
            "Security",
        )
    }

    fn reset() -> TestCaseDesign {
        tc(
            "Password reset link is sent to the registered email",
            "Click Forgot password and submit the registered email",
            "Reset link email arrives in the inbox",
            "",
        )
    }

    fn book_ok() -> TestCaseDesign {
        tc(
            "Student can book an available room",
            "Select a free room, choose a time slot, click Book",
            "Booking confirmation is displayed and emailed",
            "",
        )
    }

    fn book_taken() -> TestCaseDesign {
        tc(
            "Booking an already reserved slot is rejected",
            "Select a reserved slot and click Book",
            "Message slot unavailable is shown",
            "",
        )
    }

    fn librarian_cancel() -> TestCaseDesign {
        tc(
            "Librarian can cancel a student booking",
            "Open the booking list, choose a booking, click Cancel",
            "Booking is removed and the student is notified",
            "Librarian role",
        )
    }

    fn outside_hours() -> TestCaseDesign {
        tc(
            "Booking outside opening hours is blocked",
            "Pick a slot after closing time and submit",
            "Validation error about opening hours appears",
            "",
        )
    }

    /// Rows per attempt and use case.
    pub fn attempts() -> Vec<Vec<Vec<TestCaseDesign>>> {
        let reword = |mut c: TestCaseDesign, extra: &str| {
            c.input_action = format!("{} {extra}", c.input_action);
            c.comments = "Reworded".into();
            c
        };
        vec![
            vec![
                vec![login_ok(), login_bad_password(), lockout()],
                vec![book_ok(), book_taken()],
            ],
            vec![
                vec![reword(login_ok(), "button"), login_bad_password(), reset()],
                vec![
                    reword(book_ok(), "button"),
                    librarian_cancel(),
                    book_taken(),
                    outside_hours(),
                ],
            ],
            vec![
                vec![
                    lockout(),
                    login_ok(),
                    reword(reset(), "form"),
                    login_bad_password(),
                ],
                vec![
                    librarian_cancel(),
                    outside_hours(),
                    reword(book_taken(), "button"),
                    book_ok(),
                ],
            ],
        ]
    }

    /// The thinner single-prompt answer.
    pub fn single_attempt() -> Vec<TestCaseDesign> {
        vec![login_ok(), login_bad_password(), book_ok(), book_taken()]
    }

    /// What the model answers when asked for redundant groups in the
    /// final eight-case suite.
    pub const REDUNDANCY_REPLY: &str = "After reviewing the suite against the SRS:\n\
GROUP: TC-2, TC-3 | Both exercise the failed-login handling path\n\
GROUP: TC-5, TC-8 | Both validate that an unusable slot cannot be booked\n\
GROUP: TC-4, TC-7 | Both walk the booking list from creation to removal\n";

    /// Bulk review file applied after redundancy flagging.
    pub const REVIEW_IMPORT: &str = r#"{
  "verdicts": [
    { "tc_id": "TC-1", "category": "valid_implemented", "reviewer": "dev-a", "timestamp": "2024-05-02T09:00:00Z" },
    { "tc_id": "TC-2", "category": "valid_implemented", "reviewer": "dev-a", "timestamp": "2024-05-02T09:01:00Z" },
    { "tc_id": "TC-3", "category": "redundant", "reviewer": "dev-a", "timestamp": "2024-05-02T09:02:00Z", "tags": ["overlaps TC-2"] },
    { "tc_id": "TC-4", "category": "valid_implemented", "reviewer": "dev-a", "timestamp": "2024-05-02T09:03:00Z" },
    { "tc_id": "TC-5", "category": "valid_implemented", "reviewer": "dev-b", "timestamp": "2024-05-02T09:04:00Z" },
    { "tc_id": "TC-6", "category": "not_implemented_but_valid", "reviewer": "dev-b", "timestamp": "2024-05-02T09:05:00Z" },
    { "tc_id": "TC-7", "category": "valid_implemented", "reviewer": "dev-b", "timestamp": "2024-05-02T09:06:00Z" },
    { "tc_id": "TC-8", "category": "not_applicable", "reviewer": "dev-b", "timestamp": "2024-05-02T09:07:00Z" }
  ],
  "missed": [
    { "description": "Booking two rooms for the same slot is prevented", "reviewer": "dev-b", "timestamp": "2024-05-02T09:10:00Z" }
  ],
  "developer_flags": [
    { "member_ids": ["TC-2", "TC-3"], "rationale": "Lockout repeats the wrong-password check" }
  ],
  "validations": [
    { "flag_id": "RF-1", "verdict": "confirmed", "reviewer": "dev-a", "timestamp": "2024-05-02T09:20:00Z" },
    { "flag_id": "RF-2", "verdict": "false_positive", "reviewer": "dev-a", "timestamp": "2024-05-02T09:21:00Z" },
    { "flag_id": "RF-3", "verdict": "confirmed", "reviewer": "dev-b", "timestamp": "2024-05-02T09:22:00Z" }
  ]
}
"#;
}

/// A twelve-use-case document used to check how many prompts one chain
/// session sends.
pub mod twelve {
    use super::*;

    pub const USE_CASES: usize = 12;
    pub const ROWS_PER_USE_CASE: usize = 3;
    pub const SINGLE_ROWS: usize = 14;

    pub fn srs() -> String {
        synthetic_srs(
            "Clinic Appointment Portal",
            &["Patient", "Doctor", "Receptionist", "Administrator"],
            USE_CASES,
        )
    }

    /// One chain attempt: three distinct rows per use case.
    pub fn chain_attempt() -> Vec<Vec<TestCaseDesign>> {
        (1..=USE_CASES)
            .map(|uc| {
                (0..ROWS_PER_USE_CASE)
                    .map(|k| synthetic_case(uc, k))
                    .collect()
            })
            .collect()
    }

    /// One single-prompt reply covering the whole document more thinly.
    pub fn single_attempt() -> Vec<TestCaseDesign> {
        (0..SINGLE_ROWS)
            .map(|i| synthetic_case(i % USE_CASES + 1, i / USE_CASES))
            .collect()
    }
}

type BoxError = Box<dyn std::error::Error>;

/// Runs `fixpoint_generate` against a recording gateway and returns the
/// suite with the cassette as JSON.
fn record_generation(
    srs: &str,
    approach: Approach,
    transport: ScriptedTransport,
) -> Result<(SuiteUnion, String), BoxError> {
    let doc = parse_srs(srs, "fixture")?;
    let gateway = Gateway::record(ProviderConfig::default(), Arc::new(transport));
    let cfg = FixpointConfig {
        approach,
        ..FixpointConfig::default()
    };
    let suite = fixpoint_generate(&doc, &gateway, &cfg, &mut |_| Ok(()))?;
    Ok((
        suite,
        gateway
            .cassette()
            .expect("record mode keeps a cassette")
            .to_json(),
    ))
}

/// Writes the shipped fixture set under `dir`: SRS documents, the cassettes
/// that replay their generation and redundancy sessions, and a review file.
pub fn write_fixtures(dir: &Path) -> Result<(), BoxError> {
    let demo_dir = dir.join("demo");
    std::fs::create_dir_all(&demo_dir)?;
    std::fs::write(demo_dir.join("srs.md"), demo::SRS)?;
    let (suite, cassette) =
        record_generation(demo::SRS, Approach::Chain, chain_script(demo::attempts()))?;
    std::fs::write(demo_dir.join("generate-chain.cassette.json"), cassette)?;
    let single = single_script(vec![demo::single_attempt(), demo::single_attempt()]);
    let (_, cassette) = record_generation(demo::SRS, Approach::Single, single)?;
    std::fs::write(demo_dir.join("generate-single.cassette.json"), cassette)?;

    let doc = parse_srs(demo::SRS, "fixture")?;
    let gateway = Gateway::record(
        ProviderConfig::default(),
        Arc::new(redundancy_script(demo::REDUNDANCY_REPLY)),
    );
    flag_redundancies(&doc, &suite, &mut gateway.open_session("redundancy"))?;
    std::fs::write(
        demo_dir.join("redundancy.cassette.json"),
        gateway.cassette().expect("recorded").to_json(),
    )?;
    std::fs::write(demo_dir.join("review.json"), demo::REVIEW_IMPORT)?;

    let twelve_dir = dir.join("twelve");
    std::fs::create_dir_all(&twelve_dir)?;
    let srs = twelve::srs();
    std::fs::write(twelve_dir.join("srs.md"), &srs)?;
    let chain = chain_script(vec![twelve::chain_attempt(), twelve::chain_attempt()]);
    let (_, cassette) = record_generation(&srs, Approach::Chain, chain)?;
    std::fs::write(twelve_dir.join("generate-chain.cassette.json"), cassette)?;
    let single = single_script(vec![twelve::single_attempt(), twelve::single_attempt()]);
    let (_, cassette) = record_generation(&srs, Approach::Single, single)?;
    std::fs::write(twelve_dir.join("generate-single.cassette.json"), cassette)?;

    std::fs::write(
        dir.join("provider.example.toml"),
        ProviderConfig::default().to_toml(),
    )?;
    Ok(())
}
