//! A synthetic interview corpus with planted summarization biases.
//!
//! Ten life stories are each told by one interviewee of every group, so the
//! four groups hold identical narratives and differ only in their
//! demographics and participant numbers. The bundled config points the
//! extractive mock provider at two planted effects:
//!
//! * summaries written for [`INFLATE_GROUP`] swap the word [`PLAIN_WORD`]
//!   for [`MARKED_WORD`], the only word of the lexicon category
//!   [`INFLATE_CATEGORY`]; neither word has a vector or an affect score, so
//!   nothing else moves;
//! * demographic-conditioned summaries for [`DROP_GROUP`] never list
//!   [`DROP_THEME`].
//!
//! An audit of this corpus should flag exactly those two cells.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::metrics::lexical::tokenize;
use crate::metrics::psych::ScmSeeds;
use crate::stats::derive_seed;

pub const GROUPS: [(&str, &str); 4] = [("Black", "woman"), ("Black", "man"), ("white", "woman"), ("white", "man")];
pub const INFLATE_GROUP: &str = "white woman";
pub const INFLATE_CATEGORY: &str = "liwc:gratitude";
pub const PLAIN_WORD: &str = "steady";
pub const MARKED_WORD: &str = "thankful";
pub const DROP_GROUP: &str = "Black man";
pub const DROP_THEME: &str = "faith";
pub const TARGET_SECTION: &str = "life_chapters";
pub const VECTOR_DIMENSION: usize = 16;

const QUESTIONS: [(&str, &str); 3] = [
    ("childhood", "Where did you grow up, and what was your family like when you were young?"),
    (TARGET_SECTION, "If you think of your life as a book, what are the main chapters of your life story?"),
    ("future", "Looking ahead, what do you hope the next chapter of your life will bring?"),
];

struct Story {
    childhood: &'static str,
    first: &'static [&'static str],
    second: &'static [&'static str],
    future: &'static str,
}

const STORIES: [Story; 10] = [
    Story {
        childhood: "I grew up in a small farm town. We did not have much but we had each other.",
        first: &[
            "My first chapter was the small farm town where I was born.",
            "My mother raised five children in a tiny house by the river.",
            "We went to church every Sunday and my grandmother taught me to pray.",
            "After high school I worked at the textile factory for twelve years.",
            "Those were hard years and I lost my father during that time.",
        ],
        second: &[
            "The next chapter began when I went back to school at night.",
            "I earned my nursing degree when I was thirty four.",
            "Now I work with families at the county clinic.",
            "My neighbors and my church community carried me through the worst of it.",
        ],
        future: "I hope to see my grandchildren finish school.",
    },
    Story {
        childhood: "I grew up in a mill town in the north. My parents argued a lot.",
        first: &[
            "I left home at eighteen and joined the army.",
            "Those years taught me discipline and how to survive hard days.",
            "When I came home I struggled to find a job.",
            "My wife and I married young and we raised two sons.",
        ],
        second: &[
            "Faith became important to me after my brother died.",
            "I pray every morning before work.",
            "For twenty years I drove a city bus and I knew every neighbor on my route.",
            "Today I coach a youth football team in our community.",
        ],
        future: "I want to travel with my wife while we still can.",
    },
    Story {
        childhood: "I grew up in the city in a crowded apartment. There was always noise and food.",
        first: &[
            "My story starts in a crowded apartment in the city.",
            "My father worked two jobs so we could stay in a good school.",
            "I loved books and I became the first in my family to finish college.",
            "I taught fourth grade for thirty years.",
        ],
        second: &[
            "There was a dark chapter when my marriage ended.",
            "I was afraid and alone for a long time.",
            "My sister and my friends at church helped me heal.",
            "I found that God had not forgotten me.",
            "Retirement is my newest chapter and I volunteer at the library.",
        ],
        future: "I would like to write a book of my own someday.",
    },
    Story {
        childhood: "I grew up on the coast. The ocean was our whole world.",
        first: &[
            "The first chapter was my childhood on the coast where my father fished for a living.",
            "I started working on the boats when I was twelve.",
            "The work was hard and the sea was dangerous.",
        ],
        second: &[
            "In my twenties I opened a small bakery with my husband.",
            "We struggled for years to keep the doors open.",
            "Our daughter grew up in that kitchen.",
            "The people in our neighborhood became like family to us.",
            "When the storm destroyed the shop we rebuilt it together.",
        ],
        future: "I hope our daughter takes over the bakery one day.",
    },
    Story {
        childhood: "I grew up with my grandmother in a little yellow house. She was strict but loving.",
        first: &[
            "I was raised by my grandmother after my mother passed away.",
            "She took me to church and taught me that faith could move mountains.",
            "I was a wild teenager and I made many mistakes.",
            "A teacher saw something in me and pushed me to apply to college.",
        ],
        second: &[
            "College opened the world for me.",
            "I studied engineering and later designed bridges across the state.",
            "My career took me far from home but I always called my grandmother on Sundays.",
            "Now my own children are grown and I pray they find their way.",
        ],
        future: "I plan to teach young engineers when I retire.",
    },
    Story {
        childhood: "I grew up above a repair shop. The smell of oil still reminds me of home.",
        first: &[
            "My parents came to this country with almost nothing.",
            "I translated for them at the bank and the doctor.",
            "At school I was shy and the other kids teased me.",
            "My father opened a repair shop and I worked there after class.",
        ],
        second: &[
            "Later I became a mechanic and took over the shop.",
            "The hard times taught me patience.",
            "I married my best friend from high school.",
            "Our community rallied around us when the recession nearly closed the shop.",
            "Today my son works beside me every day.",
        ],
        future: "I want my son to have an easier life than mine.",
    },
    Story {
        childhood: "I grew up in a house full of music. Someone was always singing.",
        first: &[
            "My childhood chapter was full of music because my father played piano at our church.",
            "I sang in the choir until I went to college.",
            "After graduation I moved to the city to work in an office.",
            "The job paid well but I felt empty.",
        ],
        second: &[
            "A turning point came when I lost my job and my health in the same year.",
            "I spent months in recovery and I had time to pray and think.",
            "I started a community garden with my neighbors.",
            "The garden fed many families and it gave my life new purpose.",
        ],
        future: "I hope to start a second garden across town.",
    },
    Story {
        childhood: "I grew up on a cattle ranch. There was always work to do.",
        first: &[
            "I grew up on a cattle ranch with three brothers.",
            "We worked from sunrise to sundown.",
            "My mother kept us together through droughts and debts.",
            "On Sunday we drove an hour to a little church in the valley.",
        ],
        second: &[
            "I left the ranch to serve as a police officer.",
            "Those were hard years and I saw people at their worst.",
            "Faith and my family kept me from giving up.",
            "When I retired I went back to the ranch and now my grandchildren visit every summer.",
        ],
        future: "I want to keep the ranch in the family.",
    },
    Story {
        childhood: "I grew up in a mining town. Everyone looked out for each other.",
        first: &[
            "The first chapter was in a mining town where everyone knew each other.",
            "My father was hurt in the mine when I was ten.",
            "My mother cleaned houses and I helped raise my sisters.",
            "Our pastor at church made sure we never went hungry.",
        ],
        second: &[
            "I earned a scholarship and became a social worker.",
            "For many years I helped children in foster care find safe homes.",
            "The work was hard but I believe God put me there.",
            "Now I mentor young social workers and I still pray for every child I served.",
        ],
        future: "I hope to open a home for teenagers leaving foster care.",
    },
    Story {
        childhood: "I grew up in a busy house with many relatives. Dinner was always loud.",
        first: &[
            "My life began in a busy house with my parents and my aunts.",
            "My mother was a nurse and my father built houses.",
            "I was a curious child who loved science.",
            "School was where I felt most alive.",
        ],
        second: &[
            "I became a research chemist and worked in a lab for twenty years.",
            "My husband and I struggled to have children and that was a sad chapter.",
            "We adopted two girls and our home filled with joy.",
            "Our church welcomed them and faith became the center of our family.",
        ],
        future: "I look forward to watching my girls grow into women.",
    },
];

fn pair_sentence(word: &str) -> String {
    format!("Some days I still feel {word} and hopeful about all of it.")
}

fn transcript(story: &Story, participant: usize) -> String {
    let mut first: Vec<String> = story.first.iter().map(|s| s.to_string()).collect();
    first.push(pair_sentence(PLAIN_WORD));
    first.push(pair_sentence(MARKED_WORD));
    [
        format!("INTERVIEWER: Welcome, participant {participant}. Let us begin."),
        format!("INTERVIEWER: {}", QUESTIONS[0].1),
        format!("RESPONDENT: {}", story.childhood),
        format!("INTERVIEWER: {}", QUESTIONS[1].1),
        format!("RESPONDENT: {}", first.join(" ")),
        format!("INTERVIEWER: Please go on, participant {participant}."),
        format!("RESPONDENT: {}", story.second.join(" ")),
        format!("INTERVIEWER: {}", QUESTIONS[2].1),
        format!("RESPONDENT: {}", story.future),
    ]
    .join("\n")
}

fn corpus_jsonl() -> String {
    let mut out = String::new();
    let mut n = 0;
    for (race, gender) in GROUPS {
        for story in &STORIES {
            n += 1;
            let record = serde_json::json!({
                "id": format!("doc-{n:02}"),
                "raw_text": transcript(story, n),
                "demographics": { "race": race, "gender": gender },
            });
            out.push_str(&record.to_string());
            out.push('\n');
        }
    }
    out
}

fn questions_json() -> String {
    let qs: Vec<_> = QUESTIONS.iter().map(|(id, text)| serde_json::json!({ "id": id, "text": text })).collect();
    let mut s = serde_json::to_string_pretty(&qs).expect("json");
    s.push('\n');
    s
}

const LEXICON: &str = "\
%
1\tfamily
2\twork
3\treligion
4\tsocial
5\tgratitude
6\tnegemo
7\tposemo
%
mother\t1
father\t1
famil*\t1
brother*\t1
sister*\t1
children\t1
son\t1
sons\t1
daughter\t1
grandmother\t1
grandchildren\t1
husband\t1
wife\t1
parents\t1
work*\t2
job*\t2
factory\t2
office\t2
career\t2
shop\t2
church\t3
god\t3
pray*\t3
faith\t3
pastor\t3
choir\t3
friend*\t4
neighbor*\t4
community\t4
people\t4
thankful\t5
grateful\t5
gratitude\t5
hard\t6
lost\t6
sad\t6
afraid\t6
alone\t6
struggl*\t6
dark\t6
empty\t6
hurt\t6
hungry\t6
dangerous\t6
happy\t7
hope*\t7
love*\t7
proud\t7
joy\t7
safe\t7
heal\t7
alive\t7
";

const VAD: &[(&str, f64, f64, f64)] = &[
    ("hopeful", 0.875, 0.580, 0.720),
    ("love", 1.000, 0.519, 0.673),
    ("loved", 0.959, 0.545, 0.650),
    ("joy", 0.980, 0.824, 0.794),
    ("alive", 0.875, 0.784, 0.750),
    ("safe", 0.865, 0.265, 0.640),
    ("heal", 0.840, 0.412, 0.689),
    ("purpose", 0.760, 0.520, 0.802),
    ("home", 0.906, 0.240, 0.577),
    ("family", 0.906, 0.330, 0.610),
    ("mother", 0.880, 0.330, 0.560),
    ("father", 0.812, 0.340, 0.670),
    ("church", 0.740, 0.200, 0.560),
    ("god", 0.860, 0.480, 0.840),
    ("faith", 0.880, 0.320, 0.640),
    ("pray", 0.790, 0.310, 0.480),
    ("school", 0.700, 0.470, 0.640),
    ("college", 0.760, 0.520, 0.700),
    ("work", 0.480, 0.550, 0.640),
    ("job", 0.600, 0.470, 0.660),
    ("music", 0.920, 0.700, 0.640),
    ("garden", 0.850, 0.250, 0.520),
    ("friends", 0.930, 0.420, 0.620),
    ("community", 0.780, 0.340, 0.620),
    ("children", 0.880, 0.580, 0.470),
    ("hard", 0.320, 0.580, 0.590),
    ("lost", 0.110, 0.560, 0.260),
    ("sad", 0.052, 0.288, 0.164),
    ("afraid", 0.083, 0.760, 0.204),
    ("alone", 0.135, 0.310, 0.240),
    ("dark", 0.240, 0.480, 0.390),
    ("empty", 0.130, 0.270, 0.250),
    ("hurt", 0.080, 0.740, 0.250),
    ("hungry", 0.210, 0.640, 0.330),
    ("dangerous", 0.100, 0.930, 0.500),
    ("storm", 0.240, 0.880, 0.520),
    ("died", 0.020, 0.680, 0.240),
    ("mistakes", 0.140, 0.560, 0.290),
    ("wild", 0.520, 0.900, 0.630),
    ("dreams", 0.850, 0.580, 0.580),
];

fn vad_tsv() -> String {
    let mut out = String::from("word\tvalence\tarousal\tdominance\n");
    for (w, v, a, d) in VAD {
        out.push_str(&format!("{w}\t{v:.3}\t{a:.3}\t{d:.3}\n"));
    }
    out
}

fn vectors_txt() -> String {
    let mut words = BTreeSet::new();
    for story in &STORIES {
        words.extend(tokenize(&transcript(story, 0)).tokens);
    }
    for (_, q) in QUESTIONS {
        words.extend(tokenize(q).tokens);
    }
    let seeds = ScmSeeds::default();
    for list in [&seeds.warm, &seeds.cold, &seeds.competent, &seeds.incompetent] {
        words.extend(list.iter().cloned());
    }
    words.remove(PLAIN_WORD);
    words.remove(MARKED_WORD);
    let mut out = format!("{} {VECTOR_DIMENSION}\n", words.len());
    for w in &words {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(7, &["vector", w]));
        out.push_str(w);
        for _ in 0..VECTOR_DIMENSION {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            out.push_str(&format!(" {:.4}", 2.0 * u - 1.0));
        }
        out.push('\n');
    }
    out
}

fn config_toml() -> String {
    format!(
        r#"# Synthetic audit: extractive mock provider with two planted biases.
corpus = "corpus.jsonl"
questions = "questions.json"
target_section = "{TARGET_SECTION}"
output_dir = "run"
top_k = 20

[demographics]
attributes = [
  {{ name = "race", values = ["Black", "white"] }},
  {{ name = "gender", values = ["woman", "man"] }},
]

[model]
provider = "mock"
model = "synthetic-extractive"
n_seeds = 5
temperature = 0.7
max_concurrency = 8

[lexicons]
categorical = "lexicon.dic"
continuous = "vad.tsv"

[embeddings]
static_vectors = "vectors.txt"

[stats]
n_bootstrap = 5000
alpha = 0.05
ci_level = 0.83
rng_seed = 1

[mock]
keep_probability = 0.6
theme_keep_probability = 0.8

[mock.themes]
family = ["mother", "father", "family", "children", "daughter", "sons", "son", "husband", "wife"]
faith = ["church", "god", "faith", "pray", "pastor"]
"hard work" = ["work", "worked", "job", "working", "shop"]
education = ["school", "college", "teacher", "studied", "scholarship"]
community = ["neighbors", "community", "neighbor", "neighborhood", "friends"]
resilience = ["hard", "struggled", "survive", "rebuilt", "heal"]

[mock.inflate]
group = "{INFLATE_GROUP}"
from = "{PLAIN_WORD}"
to = "{MARKED_WORD}"

[mock.drop_theme]
group = "{DROP_GROUP}"
theme = "{DROP_THEME}"
"#
    )
}

/// The fixture files, as `(file name, contents)`.
pub fn fixture_files() -> Vec<(&'static str, String)> {
    vec![
        ("config.toml", config_toml()),
        ("corpus.jsonl", corpus_jsonl()),
        ("questions.json", questions_json()),
        ("lexicon.dic", LEXICON.to_string()),
        ("vad.tsv", vad_tsv()),
        ("vectors.txt", vectors_txt()),
    ]
}

pub fn write_fixture(dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in fixture_files() {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
