"""Tests for the data layer: containers, corpus synthesis, trials, loading and configs."""

import os
import sys
import unittest
from dataclasses import replace

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))

from tests.test_config import PROJECT_DIR, BaseTestCase, tiny_run_config
from petforge.config.run_config import DataConfig, RunConfig
from petforge.core.errors import ConfigurationError, CorpusIOError, FormatError, InputError
from petforge.data.loader import crop, load_batch, load_utterance
from petforge.data.models import Manifest, ManifestRow, Trial, TrialSet
from petforge.data.repositories import (CheckpointRepository, CheckpointState, ConfigRepository, CorpusRepository,
                                        TrialRepository)
from petforge.data.serializers import CSVSerializer, JSONSerializer, PetwSerializer
from petforge.data.synthesis import SynthesisOptions, gen_corpus, make_profile, synthesize
from petforge.data.trials import make_trials
from petforge.metrics.scoring import compute_eer

SHORT = SynthesisOptions(min_duration=0.01, max_duration=0.02)


def read_bytes(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


class TestPetwContainer(BaseTestCase):
    """The binary tensor container."""

    def setUp(self):
        super().setUp()
        rng = np.random.default_rng(0)
        self.tensors = {
            'backbone.block1.ffn.fc1.weight': rng.standard_normal((3, 4)).astype(np.float32),
            'pet.gate.inter.bias': rng.standard_normal(1),
            'scalar': np.array(2.5),
        }

    def test_round_trip(self):
        """Every tensor comes back bit-identical with its dtype and shape."""
        decoded = PetwSerializer.decode(PetwSerializer.encode(self.tensors))
        self.assertEqual(list(decoded), list(self.tensors))
        for name, value in self.tensors.items():
            self.assertEqual(decoded[name].dtype, value.dtype)
            self.assertEqual(decoded[name].shape, value.shape)
            self.assertEqual(decoded[name].tobytes(), value.tobytes())

    def test_bad_magic(self):
        """Corrupt magic bytes fail at offset 0."""
        blob = bytearray(PetwSerializer.encode(self.tensors))
        blob[:4] = b'NOPE'
        with self.assertRaises(FormatError) as ctx:
            PetwSerializer.decode(bytes(blob))
        self.assertEqual(ctx.exception.offset, 0)

    def test_bad_version(self):
        """Unknown versions fail at offset 4."""
        blob = bytearray(PetwSerializer.encode(self.tensors))
        blob[4] = 9
        with self.assertRaises(FormatError) as ctx:
            PetwSerializer.decode(bytes(blob))
        self.assertEqual(ctx.exception.offset, 4)

    def test_truncation(self):
        """A cut payload reports where reading stopped."""
        blob = PetwSerializer.encode(self.tensors)
        with self.assertRaises(FormatError) as ctx:
            PetwSerializer.decode(blob[:-3])
        self.assertIsNotNone(ctx.exception.offset)
        self.assertIn('offset', str(ctx.exception))
        with self.assertRaises(FormatError):
            PetwSerializer.decode(blob[:6])

    def test_trailing_bytes(self):
        """Extra bytes after the last tensor are rejected."""
        blob = PetwSerializer.encode(self.tensors)
        with self.assertRaises(FormatError) as ctx:
            PetwSerializer.decode(blob + b'\x00')
        self.assertEqual(ctx.exception.offset, len(blob))

    def test_unsupported_dtype(self):
        """Only 32- and 64-bit floats are stored."""
        with self.assertRaises(FormatError):
            PetwSerializer.encode({'ids': np.arange(3)})

    def test_file_round_trip(self):
        """save_to_file leaves no temporary file behind."""
        path = os.path.join(self.work_dir, 'nested', 'w.petw')
        PetwSerializer.save_to_file(self.tensors, path)
        self.assertFalse(os.path.exists(path + '.tmp'))
        self.assertEqual(PetwSerializer.load_from_file(path)['scalar'].item(), 2.5)


class TestCheckpointRepository(BaseTestCase):
    """Parameters, Adam moments and the step in one file."""

    def test_round_trip(self):
        """Reserved names separate moments and step from parameters."""
        state = CheckpointState(params={'pet.inner.block1.up.weight': np.ones((2, 3))},
                                first_moments={'pet.inner.block1.up.weight': np.full((2, 3), 0.1)},
                                second_moments={'pet.inner.block1.up.weight': np.full((2, 3), 0.01)},
                                step=42)
        path = os.path.join(self.work_dir, 'ckpt.petw')
        CheckpointRepository.save(state, path)
        loaded = CheckpointRepository.load(path)
        self.assertEqual(loaded.step, 42)
        self.assertEqual(list(loaded.params), ['pet.inner.block1.up.weight'])
        self.assertArrayEqual(loaded.first_moments['pet.inner.block1.up.weight'], np.full((2, 3), 0.1))
        self.assertArrayEqual(loaded.second_moments['pet.inner.block1.up.weight'], np.full((2, 3), 0.01))

    def test_plain_weights_are_not_checkpoints(self):
        """A weights file without a step is a format error."""
        path = os.path.join(self.work_dir, 'weights.petw')
        CheckpointRepository.save_weights({'w': np.zeros(2)}, path)
        with self.assertRaises(FormatError):
            CheckpointRepository.load(path)


class TestCsvSerializer(BaseTestCase):
    """Header plus rows."""

    def test_save_and_load(self):
        """Rows come back as strings under their header."""
        path = os.path.join(self.work_dir, 'log.csv')
        CSVSerializer.save_to_file(path, ('step', 'loss'), [(0, repr(1.5)), (1, repr(0.25))])
        header, rows = CSVSerializer.load_from_file(path)
        self.assertEqual(header, ['step', 'loss'])
        self.assertEqual(rows, [['0', '1.5'], ['1', '0.25']])

    def test_append_writes_header_once(self):
        """Appending to a new file writes the header, later appends do not."""
        path = os.path.join(self.work_dir, 'log.csv')
        CSVSerializer.append_rows(path, ('step', 'loss'), [(0, 1.0)])
        CSVSerializer.append_rows(path, ('step', 'loss'), [(1, 0.5)])
        header, rows = CSVSerializer.load_from_file(path)
        self.assertEqual(header, ['step', 'loss'])
        self.assertEqual(len(rows), 2)

    def test_truncate_after(self):
        """Rows past the resume step are dropped."""
        path = os.path.join(self.work_dir, 'log.csv')
        CSVSerializer.save_to_file(path, ('step', 'loss'), [(i, 0.0) for i in range(5)])
        CSVSerializer.truncate_after(path, 'step', 2)
        _, rows = CSVSerializer.load_from_file(path)
        self.assertEqual([row[0] for row in rows], ['0', '1', '2'])

    def test_empty_file(self):
        """A file without a header is malformed."""
        path = os.path.join(self.work_dir, 'empty.csv')
        open(path, 'w').close()
        with self.assertRaises(FormatError):
            CSVSerializer.load_from_file(path)


class TestCorpusSynthesis(BaseTestCase):
    """Deterministic synthetic speakers."""

    def test_row_count(self):
        """20 speakers x 30 utterances -> 600 manifest rows."""
        manifest = gen_corpus(20, 30, 5, self.work_dir, SHORT)
        self.assertEqual(len(manifest), 600)
        self.assertEqual(len(manifest.speakers()), 20)
        self.assertEqual(len(set(manifest.ids())), 600)

    def test_same_seed_same_bytes(self):
        """Two corpora from one seed are byte-identical."""
        first = os.path.join(self.work_dir, 'a')
        second = os.path.join(self.work_dir, 'b')
        manifest = gen_corpus(3, 2, 11, first, SHORT)
        gen_corpus(3, 2, 11, second, SHORT)
        self.assertEqual(read_bytes(os.path.join(first, 'manifest.tsv')),
                         read_bytes(os.path.join(second, 'manifest.tsv')))
        for row in manifest:
            self.assertEqual(read_bytes(os.path.join(first, row.path)), read_bytes(os.path.join(second, row.path)))

    def test_durations_in_range(self):
        """Every utterance lasts between the configured bounds."""
        options = SynthesisOptions(min_duration=0.05, max_duration=0.1)
        profile = make_profile(3, 0, options)
        for index in range(5):
            duration = synthesize(profile, index, 3, options).duration
            self.assertGreaterEqual(duration, 0.05 - 1.0 / options.sample_rate)
            self.assertLessEqual(duration, 0.1 + 1.0 / options.sample_rate)

    def test_speakers_differ_in_harmonics(self):
        """The spectral peak of a long utterance sits near one of its own speaker's harmonics."""
        options = SynthesisOptions(min_duration=2.0, max_duration=2.0)
        peaks = []
        for index in range(2):
            profile = make_profile(8, index, options)
            waveform = synthesize(profile, 0, 8, options).waveform.astype(np.float64)
            spectrum = np.abs(np.fft.rfft(waveform * np.hanning(len(waveform))))
            freqs = np.fft.rfftfreq(len(waveform), 1.0 / options.sample_rate)
            peak = freqs[int(np.argmax(spectrum))]
            nearest = min(profile.harmonics, key=lambda h: abs(h - peak))
            self.assertLess(abs(nearest - peak) / nearest, 0.05)
            peaks.append(profile.harmonics)
        self.assertNotEqual(peaks[0], peaks[1])

    def test_disjoint_partitions(self):
        """Train and eval manifests share no speaker."""
        gen_corpus(5, 2, 1, self.work_dir, SHORT, num_eval_speakers=2)
        repository = CorpusRepository(self.work_dir)
        train = set(repository.load_manifest('train_manifest.tsv').speakers())
        evaluation = set(repository.load_manifest('eval_manifest.tsv').speakers())
        self.assertEqual(len(train), 3)
        self.assertEqual(len(evaluation), 2)
        self.assertEqual(train & evaluation, set())

    def test_invalid_sizes(self):
        """At least two speakers and one utterance each."""
        with self.assertRaises(InputError):
            gen_corpus(1, 3, 0, self.work_dir, SHORT)
        with self.assertRaises(InputError):
            gen_corpus(3, 0, 0, self.work_dir, SHORT)
        with self.assertRaises(InputError):
            gen_corpus(3, 2, 0, self.work_dir, SHORT, num_eval_speakers=3)

    def test_waveform_file_layout(self):
        """One rank-1 tensor named waveform@<rate> per file."""
        manifest = gen_corpus(2, 1, 0, self.work_dir, SHORT)
        tensors = PetwSerializer.load_from_file(os.path.join(self.work_dir, manifest.rows[0].path))
        self.assertEqual(list(tensors), ['waveform@4000'])
        self.assertEqual(tensors['waveform@4000'].dtype, np.float32)


class TestTrials(BaseTestCase):
    """Trial sampling and the trial / score text formats."""

    def setUp(self):
        super().setUp()
        rows = [ManifestRow(f"s{s}-u{u}", f"s{s}", f"wav/s{s}/u{u}.petw") for s in range(3) for u in range(3)]
        self.manifest = Manifest(rows, self.work_dir)

    def test_requested_counts(self):
        """Counts match, pairs are unique and never self-paired."""
        trials = make_trials(self.manifest, 5, 7, seed=3)
        self.assertEqual(int(trials.labels.sum()), 5)
        self.assertEqual(len(trials), 12)
        pairs = [(t.enroll_id, t.test_id) for t in trials]
        self.assertEqual(len(set(pairs)), 12)
        self.assertTrue(all(a != b for a, b in pairs))
        speaker = {row.utt_id: row.speaker_id for row in self.manifest}
        for t in trials:
            self.assertEqual(t.is_target, speaker[t.enroll_id] == speaker[t.test_id])

    def test_deterministic(self):
        """One seed, one trial list."""
        self.assertEqual(make_trials(self.manifest, 4, 4, 9).trials, make_trials(self.manifest, 4, 4, 9).trials)

    def test_insufficient_pairs(self):
        """3 speakers x 3 utterances hold only 9 target pairs."""
        with self.assertRaises(InputError):
            make_trials(self.manifest, 10, 1, 0)

    def test_zero_targets_fail_later(self):
        """A nontarget-only list is produced but cannot be scored."""
        trials = make_trials(self.manifest, 0, 4, 0)
        with self.assertRaises(InputError):
            compute_eer(np.zeros(len(trials)), trials.labels)

    def test_trial_file_round_trip(self):
        """`label enroll test` lines."""
        path = os.path.join(self.work_dir, 'trials.txt')
        trials = make_trials(self.manifest, 3, 3, 0)
        TrialRepository.write_trials(trials, path)
        self.assertEqual(TrialRepository.load_trials(path).trials, trials.trials)

    def test_malformed_trial_line(self):
        """Labels are 0 or 1."""
        path = os.path.join(self.work_dir, 'bad.txt')
        with open(path, 'w') as f:
            f.write('2 a b\n')
        with self.assertRaises(FormatError):
            TrialRepository.load_trials(path)

    def test_score_file_must_cover_trials(self):
        """Every trial needs a score line."""
        trials = TrialSet([Trial(1, 'a', 'b'), Trial(0, 'a', 'c')])
        with self.assertRaises(FormatError):
            TrialRepository.attach_scores(trials, [('a', 'b', 0.5)])

    def test_missing_trial_file(self):
        """Unreadable files are IO errors."""
        with self.assertRaises(CorpusIOError):
            TrialRepository.load_trials(os.path.join(self.work_dir, 'absent.txt'))


class TestLoader(BaseTestCase):
    """Cropping and batching."""

    def setUp(self):
        super().setUp()
        self.manifest = gen_corpus(3, 2, 4, self.work_dir, SynthesisOptions(min_duration=0.05, max_duration=0.06))
        self.repository = CorpusRepository(self.work_dir)

    def test_identity_crop(self):
        """crop_len equal to the length returns the waveform."""
        waveform = np.arange(10.0)
        self.assertArrayEqual(crop(waveform, 10, 'train', np.random.default_rng(0)), waveform)
        self.assertArrayEqual(crop(waveform, 10, 'eval'), waveform)

    def test_center_crop(self):
        """Eval crops are centered."""
        self.assertArrayEqual(crop(np.arange(10.0), 4, 'eval'), [3, 4, 5, 6])

    def test_short_waveform(self):
        """Too short without padding is an input error; padding appends zeros."""
        with self.assertRaises(InputError):
            crop(np.ones(3), 5, 'eval')
        self.assertArrayEqual(crop(np.ones(3), 5, 'eval', pad=True), [1, 1, 1, 0, 0])

    def test_batch_shapes_and_labels(self):
        """All waveforms share crop_len; labels are contiguous speaker indices."""
        ids = self.manifest.ids()
        batch = load_batch(self.manifest, ids, 150, self.repository, rng=np.random.default_rng(0))
        self.assertEqual(batch.waveforms.shape, (6, 150))
        self.assertEqual(sorted(set(batch.labels.tolist())), [0, 1, 2])

    def test_eval_batches_repeat(self):
        """Eval mode is deterministic across calls."""
        ids = self.manifest.ids()[:3]
        first = load_batch(self.manifest, ids, 150, self.repository, mode='eval')
        second = load_batch(self.manifest, ids, 150, self.repository, mode='eval')
        self.assertArrayEqual(first.waveforms, second.waveforms)

    def test_normalized_utterance(self):
        """Whole utterances come back zero-mean, unit-variance as [1, L]."""
        utt = load_utterance(self.manifest, self.manifest.ids()[0], self.repository, dtype=np.float64)
        self.assertEqual(utt.shape[0], 1)
        self.assertAlmostEqual(float(utt.mean()), 0.0, places=6)
        self.assertAlmostEqual(float(utt.std()), 1.0, places=4)

    def test_missing_file(self):
        """A manifest row pointing nowhere is an IO error."""
        manifest = Manifest([ManifestRow('ghost', 'spk000', 'wav/none/ghost.petw')], self.work_dir)
        with self.assertRaises(CorpusIOError):
            load_batch(manifest, ['ghost'], 10, self.repository, mode='eval')

    def test_unknown_id(self):
        """Ids outside the manifest are input errors."""
        with self.assertRaises(InputError):
            load_batch(self.manifest, ['nobody'], 10, self.repository, mode='eval')


class TestRunConfig(BaseTestCase):
    """Run configuration documents and validation."""

    def setUp(self):
        super().setUp()
        self.repository = ConfigRepository()

    def test_shipped_configs_validate(self):
        """Every config under configs/ loads and validates."""
        for name in ('desk.json', 'pretrain.json', 'grad_suite.json', 'full_scale.json'):
            with self.subTest(name=name):
                self.repository.load_run_config(str(PROJECT_DIR / 'configs' / name))

    def test_round_trip(self):
        """save then load gives an equal config."""
        config = tiny_run_config(self.work_dir, 'lora')
        path = os.path.join(self.work_dir, 'run.json')
        self.repository.save_run_config(config, path)
        self.assertEqual(ConfigRepository().load_run_config(path), config)

    def test_missing_file(self):
        """Missing files are configuration errors."""
        with self.assertRaises(ConfigurationError):
            self.repository.load_run_config(os.path.join(self.work_dir, 'absent.json'))

    def test_unknown_keys(self):
        """Unknown keys are rejected at every level."""
        for document in ({'learning_rate': 1.0}, {'method': {'rank': 3}}, {'data': {'speakers': 3}},
                         {'backbone': {'preset': 'huge'}}):
            with self.subTest(document=document):
                with self.assertRaises(ConfigurationError):
                    RunConfig.from_dict(document)

    def test_omitted_sections_use_desk_defaults(self):
        """A partial method section is merged over the desk method."""
        config = RunConfig.from_dict({'method': {'method': 'lora'}})
        self.assertEqual(config.method.lora_rank, 8)
        config.validate()

    def test_invalid_json(self):
        """Broken JSON is a configuration error."""
        path = os.path.join(self.work_dir, 'broken.json')
        with open(path, 'w') as f:
            f.write('{"seed": ')
        with self.assertRaises(ConfigurationError):
            JSONSerializer.load_from_file(path)

    def test_validation_failures(self):
        """Pre-flight checks catch impossible settings."""
        base = RunConfig()
        bad = (replace(base, dtype='float16'),
               replace(base, warmup_steps=500),
               replace(base, data=replace(base.data, sample_rate=16000)),
               replace(base, data=replace(base.data, crop_seconds=0.01)),
               replace(base, data=replace(base.data, num_eval_speakers=1)))
        for config in bad:
            with self.assertRaises(ConfigurationError):
                config.validate()

    def test_warmup_resolution(self):
        """Warm-up defaults to a tenth of the steps."""
        self.assertEqual(RunConfig.preset('tiny').resolved_warmup_steps, 2)
        self.assertEqual(RunConfig().resolved_warmup_steps, 30)

    def test_presets(self):
        """desk, tiny and full exist; other names do not."""
        for name in ('desk', 'tiny', 'full'):
            RunConfig.preset(name).validate()
        with self.assertRaises(ConfigurationError):
            RunConfig.preset('huge')

    def test_crop_samples(self):
        """One second at 4000 Hz."""
        self.assertEqual(DataConfig().crop_samples, 4000)


if __name__ == '__main__':
    unittest.main()
