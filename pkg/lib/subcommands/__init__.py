"""Synthamt CLI subcommands."""


# Imports
from argparse import _SubParsersAction

from lib.subcommands import (
    evaluate, experiment, finetune, fixtures, realify, render, train,
    transcribe,
)


def init_argparse_action(action: _SubParsersAction):
    """Initialize the subcommands argument parser.

    Parameters
    ----------
    action : _SubParsersAction
        Subcommands argument parser.
    """
    fixtures.init_argparse_parser(action.add_parser(
        'fixtures',
        description='Write a toy sample bank, random MIDI files and a '
                    'starter config.',
        help='Write toy fixtures.',
    ))
    render.init_argparse_parser(action.add_parser(
        'render',
        description='Render synthetic audio and note annotations from MIDI '
                    'files and one-shot samples.',
        help='Render a synthetic dataset.',
    ))
    realify.init_argparse_parser(action.add_parser(
        'realify',
        description='Corrupt audio into an unannotated real-domain '
                    'directory.',
        help='Build real-domain audio.',
    ))
    train.init_argparse_parser(action.add_parser(
        'train',
        description='Pre-train the transcription model on synthetic data.',
        help='Pre-train a model.',
    ))
    finetune.init_argparse_parser(action.add_parser(
        'finetune',
        description='Fine-tune a pre-trained model with a domain '
                    'discriminator on unannotated real audio.',
        help='Fine-tune a model.',
    ))
    transcribe.init_argparse_parser(action.add_parser(
        'transcribe',
        description='Transcribe WAV files into MIDI files.',
        help='Transcribe audio.',
    ))
    evaluate.init_argparse_parser(action.add_parser(
        'evaluate',
        description='Compute note-level F, Fn and frame accuracy for '
                    'file name aligned estimates and references.',
        help='Evaluate transcriptions.',
    ))
    experiment_parser = action.add_parser(
        'experiment',
        help='Run predefined desk-scale experiments.'
    )
    experiment.init_argparse_action(experiment_parser.add_subparsers(
        dest='experiment',
        title='Experiments',
        description='Run predefined desk-scale experiments.',
        required=True,
    ))
