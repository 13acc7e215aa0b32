//! Fetching concept components from a Snowstorm-style REST terminology server.

mod client;
mod payload;
pub mod stub;

pub use client::{fetch_all, Checkpoint, FailedFetch, FetchError, FetchReport, Fetched, FetchedRows, Routes, ServerConfig, SnowstormClient};
pub use payload::{ConceptBundle, ConceptPayload, DescriptionPayload, Page, RelationshipPayload, StubDocument};

#[cfg(test)]
mod tests {
    use super::stub::{Fault, StubServer};
    use super::*;
    use crate::rf2::well_known::*;
    use crate::rf2::{ConceptRow, DescriptionRow, EffectiveTime, RelationshipRow, SctId};

    fn id(v: u64) -> SctId {
        SctId::new(v).unwrap()
    }

    fn bundle(i: u64) -> ConceptBundle {
        let cid = 100_000 + i;
        let t = EffectiveTime::new(20200101).unwrap();
        ConceptBundle {
            concept: ConceptRow { id: id(cid), effective_time: t, active: true, module_id: CORE_MODULE, definition_status_id: PRIMITIVE },
            descriptions: (0..(i % 5 + 1))
                .map(|k| DescriptionRow {
                    id: id(1_000_000 + i * 10 + k),
                    effective_time: t,
                    active: true,
                    module_id: CORE_MODULE,
                    concept_id: id(cid),
                    language_code: "en".into(),
                    type_id: if k == 0 { FSN_TYPE } else { SYNONYM_TYPE },
                    term: format!("Concept {i} term {k}"),
                    case_significance_id: CASE_INSENSITIVE,
                })
                .collect(),
            relationships: (0..(i % 3))
                .map(|k| RelationshipRow {
                    id: id(2_000_000 + i * 10 + k),
                    effective_time: t,
                    active: true,
                    module_id: CORE_MODULE,
                    source_id: id(cid),
                    destination_id: id(100_000 + (i + k + 1) % 50 + 1),
                    relationship_group: k as u32,
                    type_id: IS_A,
                    characteristic_type_id: INFERRED_RELATIONSHIP,
                    modifier_id: EXISTENTIAL_MODIFIER,
                })
                .collect(),
        }
    }

    fn client(server: &StubServer, page_size: usize) -> SnowstormClient {
        SnowstormClient::new(ServerConfig {
            base_url: server.url().to_string(),
            page_size,
            backoff_base_ms: 1,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn bundle_round_trips_through_stub_with_pagination() {
        let bundles: Vec<ConceptBundle> = (1..=10).map(bundle).collect();
        let dir = tempfile::tempdir().unwrap();
        stub::write_documents(dir.path(), &bundles).unwrap();
        let server = StubServer::start(dir.path()).unwrap();
        let client = client(&server, 2);
        for b in &bundles {
            let fetched = client.fetch_concept_bundle(b.concept.id).unwrap();
            assert_eq!(&fetched.bundle, b);
            assert_eq!(fetched.retries, 0);
        }
    }

    #[test]
    fn unknown_concept_is_terminal() {
        let server = StubServer::from_bundles(&[bundle(1)]).unwrap();
        let err = client(&server, 10).fetch_concept_bundle(id(999_999)).unwrap_err();
        assert_eq!(err, FetchError::UnknownConcept(id(999_999)));
        assert_eq!(server.hits(id(999_999)), 1);
    }

    #[test]
    fn transient_server_errors_are_retried() {
        let b = bundle(4);
        let server = StubServer::from_bundles(std::slice::from_ref(&b)).unwrap();
        server.inject(b.concept.id, Fault::Transient { status: 500, times: 2 });
        let fetched = client(&server, 10).fetch_concept_bundle(b.concept.id).unwrap();
        assert_eq!(fetched.bundle, b);
        assert_eq!(fetched.retries, 2);
    }

    #[test]
    fn retries_are_bounded() {
        let b = bundle(4);
        let server = StubServer::from_bundles(std::slice::from_ref(&b)).unwrap();
        server.inject(b.concept.id, Fault::Permanent { status: 503 });
        let err = client(&server, 10).fetch_concept_bundle(b.concept.id).unwrap_err();
        assert!(matches!(err, FetchError::Status { status: 503, .. }));
        assert_eq!(server.hits(b.concept.id), 4);
    }

    #[test]
    fn concurrency_does_not_change_results() {
        let bundles: Vec<ConceptBundle> = (1..=50).map(bundle).collect();
        let ids: Vec<SctId> = bundles.iter().map(|b| b.concept.id).collect();
        let server = StubServer::from_bundles(&bundles).unwrap();
        let client = client(&server, 3);
        let (one, r1) = fetch_all(&client, &ids, 1, None);
        let (eight, r8) = fetch_all(&client, &ids, 8, None);
        assert_eq!(one, eight);
        assert_eq!((r1.fetched, r8.fetched), (50, 50));
        assert_eq!(one.concepts.len(), 50);
    }

    #[test]
    fn permanent_failures_are_isolated() {
        let bundles: Vec<ConceptBundle> = (1..=50).map(bundle).collect();
        let ids: Vec<SctId> = bundles.iter().map(|b| b.concept.id).collect();
        let server = StubServer::from_bundles(&bundles).unwrap();
        for i in [3, 17, 42] {
            server.inject(ids[i], Fault::Permanent { status: 500 });
        }
        let (rows, report) = fetch_all(&client(&server, 10), &ids, 4, None);
        assert_eq!(report.requested, 50);
        assert_eq!(report.fetched, 47);
        assert_eq!(report.failed.iter().map(|f| f.id).collect::<Vec<_>>(), vec![ids[3], ids[17], ids[42]]);
        assert_eq!(rows.concepts.len(), 47);
    }

    #[test]
    fn empty_id_list() {
        let server = StubServer::from_bundles(&[]).unwrap();
        let (rows, report) = fetch_all(&client(&server, 10), &[], 4, None);
        assert_eq!(rows, FetchedRows::default());
        assert_eq!(report.requested, 0);
    }

    #[test]
    fn checkpoint_resumes_without_refetching() {
        let bundles: Vec<ConceptBundle> = (1..=10).map(bundle).collect();
        let ids: Vec<SctId> = bundles.iter().map(|b| b.concept.id).collect();
        let server = StubServer::from_bundles(&bundles).unwrap();
        let client = client(&server, 10);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fetch.checkpoint");

        let (cp, done) = Checkpoint::open(&path).unwrap();
        let (first, _) = fetch_all(&client, &ids[..6], 2, Some((&cp, done)));
        drop(cp);
        let hits_before = server.hits(ids[0]);

        let (cp, done) = Checkpoint::open(&path).unwrap();
        assert_eq!(done.len(), 6);
        let (all, report) = fetch_all(&client, &ids, 2, Some((&cp, done)));
        assert_eq!(report.resumed, 6);
        assert_eq!(report.fetched, 10);
        assert_eq!(server.hits(ids[0]), hits_before);
        assert!(first.concepts.iter().all(|c| all.concepts.contains(c)));
    }

    #[test]
    fn duplicate_ids_yield_unique_rows() {
        let bundles: Vec<ConceptBundle> = (1..=5).map(bundle).collect();
        let server = StubServer::from_bundles(&bundles).unwrap();
        let ids: Vec<SctId> = bundles.iter().chain(bundles.iter()).map(|b| b.concept.id).collect();
        let (rows, report) = fetch_all(&client(&server, 10), &ids, 3, None);
        assert_eq!(report.requested, 5);
        assert_eq!(rows.concepts.len(), 5);
        let mut desc_ids: Vec<SctId> = rows.descriptions.iter().map(|d| d.id).collect();
        desc_ids.dedup();
        assert_eq!(desc_ids.len(), rows.descriptions.len());
    }
}
