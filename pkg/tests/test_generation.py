import json
import re
from pathlib import Path

import httpx
import numpy as np
import pytest

from kgsynth.errors import BackendUnavailable, ConfigError, EmptyDomain, EmptyTable
from kgsynth.generation import (
    BackendConfig,
    ChatCompletionBackend,
    ConstantBackend,
    KbMode,
    PersonaConfig,
    PersonaMockBackend,
    ScriptedBackend,
    generate_dataset,
    generate_patient,
    load_kb,
    random_baseline,
    sample_persona,
)
from kgsynth.generation.persona import SEVERITY_PRIORS, Persona
from kgsynth.tabular import CategoricalTable, builtin_schema, empirical_pmf, table_to_csv

KB = Path(__file__).parent / "data" / "kb" / "manifest.json"
PERSONA = Persona("male", 41, "mild", "balanced", "medium", "conversational", 0.5, 1)
ITEM_RE = re.compile(r"^## Current item\n(it\d+):", re.MULTILINE)


class TestPersona:
    def test_deterministic(self):
        cfg = PersonaConfig()
        assert sample_persona(cfg, 5) == sample_persona(cfg, 5)
        assert sample_persona(cfg, 5) != sample_persona(cfg, 6)

    def test_singleton_domains(self):
        cfg = PersonaConfig(
            sex_domain=("male",), age_domain=(50,), severity_pmf={"severe": 1.0},
            response_style_pmf={"understating": 1}, awareness_pmf={"low": 1},
            communication_pmf={"detailed": 1}, consistency_range=(0.3, 0.3),
        )
        p = sample_persona(cfg, 99)
        assert p == Persona("male", 50, "severe", "understating", "low", "detailed", 0.3, 99)

    def test_sex_fraction(self):
        cfg = PersonaConfig()
        female = sum(sample_persona(cfg, s).sex == "female" for s in range(10_000))
        assert 0.47 <= female / 10_000 <= 0.53

    def test_per_disorder_severity(self):
        cfg = PersonaConfig(severity_pmf={"minimal": 1}, severity_by_disorder={"panic": {"severe": 1}})
        assert sample_persona(cfg, 1, "panic").severity_prior == "severe"
        assert sample_persona(cfg, 1, "agoraphobia").severity_prior == "minimal"

    def test_empty_domain(self):
        with pytest.raises(EmptyDomain):
            sample_persona(PersonaConfig(sex_domain=()), 0)
        with pytest.raises(EmptyDomain):
            sample_persona(PersonaConfig(sex_pmf={"female": 0.0}), 0)

    def test_from_dict(self):
        cfg = PersonaConfig.from_dict({"age_domain": ["20", "21"], "consistency_range": [0.2, 0.4]})
        p = sample_persona(cfg, 3)
        assert p.age in (20, 21) and 0.2 <= p.consistency_level <= 0.4


class TestPatient:
    def test_constant_zero(self):
        schema = builtin_schema("panic")
        rec = generate_patient(PERSONA, schema, KbMode.NO_KB, ConstantBackend("0"))
        assert rec.row == ("male", "41") + ("0",) * 10
        assert rec.total_retries == 0

    def test_item_index_mod_five(self):
        schema = builtin_schema("panic")
        backend = ScriptedBackend(lambda prompt, i: f"ok\nSCORE: {i % 5}")
        rec = generate_patient(PERSONA, schema, KbMode.NO_KB, backend)
        assert rec.row[2:] == tuple(str(i % 5) for i in range(10))
        assert backend.calls == 10

    def test_two_failures_then_success(self):
        schema = builtin_schema("panic")
        state = {"failures": 0}

        def script(prompt, i):
            if i >= 2 and i < 4:  # third item gets two bad replies
                state["failures"] += 1
                return "I'm not sure how to rate that." if i == 2 else "SCORE: 9"
            return "fine\nSCORE: 1"

        rec = generate_patient(PERSONA, schema, KbMode.NO_KB, ScriptedBackend(script), max_retries=2)
        assert rec.row[2:] == ("1",) * 10
        assert rec.retries["it3"] == 2
        assert rec.total_retries == 2

    def test_exhausted_retries(self):
        from kgsynth.errors import PatientGenerationFailed

        with pytest.raises(PatientGenerationFailed) as err:
            generate_patient(PERSONA, builtin_schema("panic"), KbMode.NO_KB, ScriptedBackend(lambda p, i: "no"), max_retries=2)
        assert err.value.item_id == "it1" and err.value.attempts == 3

    def test_memory_prefix_in_every_prompt(self):
        schema = builtin_schema("panic")
        prompts = []
        backend = ScriptedBackend(lambda p, i: (prompts.append(p), f"SCORE: {i % 5}")[1])
        generate_patient(PERSONA, schema, KbMode.NO_KB, backend)
        for i, prompt in enumerate(prompts):
            memory = prompt.split("## Previous answers\n")[1].split("\n\n")[0].splitlines()
            expected = [f"it{j + 1}: {j % 5}" for j in range(i)] or ["(none yet)"]
            assert memory == expected
            assert ITEM_RE.search(prompt).group(1) == f"it{i + 1}"

    def test_knowledge_injected_and_logged(self):
        index = load_kb(KB)
        prompts = []
        backend = ScriptedBackend(lambda p, i: (prompts.append(p), "SCORE: 2")[1])
        rec = generate_patient(PERSONA, builtin_schema("panic"), KbMode.DUAL_KB, backend, index, k=2)
        assert index.search_calls == 10
        assert all("## Knowledge Context" in p for p in prompts)
        assert all(len(ids) <= 2 for ids in rec.snippet_ids.values())

    def test_backend_unavailable_propagates(self):
        def boom(prompt, i):
            raise BackendUnavailable("down")

        with pytest.raises(BackendUnavailable):
            generate_patient(PERSONA, builtin_schema("panic"), KbMode.NO_KB, ScriptedBackend(boom))


class TestDataset:
    def test_five_rows(self):
        schema = builtin_schema("agoraphobia")
        res = generate_dataset(5, schema, KbMode.NO_KB, ConstantBackend("3"), master_seed=1)
        assert len(res.table) == 5
        assert all(r[2:] == ("3",) * 10 for r in res.table.rows)
        assert res.shortfall == 0

    def test_reproducible(self):
        schema = builtin_schema("social_anxiety")
        a = generate_dataset(20, schema, KbMode.DUAL_KB, PersonaMockBackend(), load_kb(KB), master_seed=7)
        b = generate_dataset(20, schema, KbMode.DUAL_KB, PersonaMockBackend(), load_kb(KB), master_seed=7, max_workers=4)
        assert table_to_csv(a.table) == table_to_csv(b.table)
        assert json.dumps(a.run_log()) == json.dumps(b.run_log())

    def test_no_kb_skips_retrieval(self):
        index = load_kb(KB)
        generate_dataset(10, builtin_schema("panic"), KbMode.NO_KB, PersonaMockBackend(), index, master_seed=2)
        assert index.search_calls == 0

    def test_severity_orders_column_means(self):
        schema = builtin_schema("panic")
        res = generate_dataset(100, schema, KbMode.NO_KB, PersonaMockBackend(), master_seed=3)
        groups = {s: [] for s in SEVERITY_PRIORS}
        for rec in res.records:
            groups[rec.persona.severity_prior].append([int(v) for v in rec.row[2:]])
        means = [np.mean(groups[s]) for s in SEVERITY_PRIORS if groups[s]]
        assert len(means) == 4
        assert means == sorted(means) and len(set(means)) == 4

    def test_failed_patients_skipped(self):
        schema = builtin_schema("panic")

        def script(prompt, i):
            return "no score" if "Age: " in prompt and "Severity prior: severe" in prompt else "SCORE: 1"

        res = generate_dataset(30, schema, KbMode.NO_KB, ScriptedBackend(script), master_seed=4, max_retries=0)
        n_severe = sum(1 for r in res.records if r is None)
        assert n_severe > 0
        assert len(res.table) == 30 - n_severe
        log = res.run_log()
        assert log["shortfall"] == n_severe
        assert sum(p["status"] == "failed" for p in log["patients"]) == n_severe

    def test_rows_validate(self):
        schema = builtin_schema("generalized_anxiety")
        res = generate_dataset(15, schema, KbMode.NO_KB, PersonaMockBackend(), master_seed=5)
        CategoricalTable(schema, res.table.rows)


class TestBaseline:
    def _real(self, sexes, ages):
        schema = builtin_schema("panic")
        rows = [(s, a) + ("0",) * 10 for s, a in zip(sexes, ages)]
        return CategoricalTable(schema, tuple(rows))

    def test_all_female(self):
        base = random_baseline(self._real(["female"] * 20, ["30"] * 20), seed=1)
        assert set(base.column("sex")) == {"female"}
        assert len(base) == 20

    def test_uniform_items(self):
        rng = np.random.default_rng(0)
        real = self._real(rng.choice(["female", "male"], 10_000, p=[0.7, 0.3]), [str(a) for a in rng.integers(18, 81, 10_000)])
        base = random_baseline(real, seed=2)
        for item in base.schema.item_ids:
            freqs = empirical_pmf(base, item).probabilities.values()
            assert all(0.18 <= f <= 0.22 for f in freqs)

    def test_deterministic(self):
        real = self._real(["female", "male"] * 5, ["30", "40"] * 5)
        assert random_baseline(real, 3) == random_baseline(real, 3)

    def test_empty(self):
        with pytest.raises(EmptyTable):
            random_baseline(CategoricalTable(builtin_schema("panic"), ()), 0)


class TestHTTPBackend:
    def _config(self, **kw):
        return BackendConfig(endpoint="http://llm.local/v1/chat/completions", model="mistral-7b", **kw)

    def test_round_trip(self, monkeypatch):
        monkeypatch.setenv("KGSYNTH_API_KEY", "sk-test")
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = json.loads(request.content)
            return httpx.Response(200, json={"choices": [{"message": {"content": "hm\nSCORE: 2"}}]})

        backend = ChatCompletionBackend(self._config(temperature=0.2), transport=httpx.MockTransport(handler))
        assert backend.complete([{"role": "user", "content": "hi"}]) == "hm\nSCORE: 2"
        assert seen["auth"] == "Bearer sk-test"
        assert seen["body"]["model"] == "mistral-7b" and seen["body"]["temperature"] == 0.2

    def test_errors_become_unavailable(self):
        backend = ChatCompletionBackend(self._config(), transport=httpx.MockTransport(lambda r: httpx.Response(503)))
        with pytest.raises(BackendUnavailable):
            backend.complete([{"role": "user", "content": "hi"}])
        junk = ChatCompletionBackend(self._config(), transport=httpx.MockTransport(lambda r: httpx.Response(200, json={})))
        with pytest.raises(BackendUnavailable):
            junk.complete([{"role": "user", "content": "hi"}])

    def test_key_not_accepted_from_config(self):
        with pytest.raises(ConfigError):
            BackendConfig.from_dict({"endpoint": "x", "model": "m", "api_key": "secret"})
        assert BackendConfig.from_dict({"endpoint": "x", "model": "m", "api_key_env": "MY_KEY"}).api_key_env == "MY_KEY"
