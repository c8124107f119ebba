"""Dataset index SQLAlchemy interfaces."""

import sqlalchemy as sa

metadata = sa.MetaData()
"""The metadata associated with all SQL tables defined in this module.

:meta hide-value:
"""

recordings = sa.Table(
    "sigmf.recordings",
    metadata,
    sa.Column(
        "path",
        sa.String,
        primary_key=True,
        doc="Recording base path (without the `.sigmf-*` extension).",
    ),
    sa.Column("device_id", sa.Integer, nullable=False, doc="Transmitting device ID."),
    sa.Column("scenario_id", sa.String, nullable=False, doc="Scenario label."),
    sa.Column("day", sa.Integer, nullable=False, doc="Capture day."),
    sa.Column("location", sa.String, nullable=False, doc="Capture location."),
    sa.Column("config_id", sa.Integer, nullable=False, doc="LoRa configuration ID."),
    sa.Column("receiver_id", sa.Integer, nullable=False, doc="Receiver ID."),
    sa.Column(
        "transmission",
        sa.Integer,
        nullable=False,
        doc="Transmission index within the scenario.",
    ),
    sa.Column(
        "sample_rate_hz", sa.Float, nullable=False, doc="Sample rate (samples/s)."
    ),
    sa.Column("carrier_hz", sa.Float, nullable=False, doc="Carrier frequency (Hz)."),
    sa.Column(
        "sample_count", sa.Integer, nullable=False, doc="Number of complex samples."
    ),
)
"""SQL table for the recording index as managed by
:data:`lorafp.sigmf.feat.recordings` (an alias for
:class:`lorafp.sigmf.feat.Recordings`).

:meta hide-value:
"""
