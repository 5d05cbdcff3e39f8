#include "lifted/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include "lifted/errors.hpp"
#include "lifted/random.hpp"

namespace lifted {

namespace {

struct Drug {
  std::string_view name;
  std::string_view smiles;
  std::string_view description;
};

constexpr std::array<Drug, 24> kDrugs = {{
    {"aspirin", "CC(=O)OC1=CC=CC=C1C(=O)O", "an anti-inflammatory agent that inhibits cyclooxygenase"},
    {"ibuprofen", "CC(C)CC1=CC=C(C=C1)C(C)C(=O)O", "a nonsteroidal anti-inflammatory drug"},
    {"paracetamol", "CC(=O)NC1=CC=C(C=C1)O", "an analgesic and antipyretic agent"},
    {"metformin", "CN(C)C(=N)N=C(N)N", "a biguanide that lowers hepatic glucose production"},
    {"nifedipine", "COC(=O)C1=C(NC(=C(C1C2=CC=CC=C2[N+](=O)[O-])C(=O)OC)C)C", "a calcium channel blocker for blood pressure control"},
    {"thalidomide", "C1CC(=O)NC(=O)C1N2C(=O)C3=CC=CC=C3C2=O", "an immunomodulatory agent"},
    {"erlotinib", "COCCOC1=C(C=C2C(=C1)C(=NC=N2)NC3=CC=CC(=C3)C#C)OCCOC", "a tyrosine kinase inhibitor targeting the epidermal growth factor receptor"},
    {"gefitinib", "COC1=C(C=C2C(=C1)N=CN=C2NC3=CC(=C(C=C3)F)Cl)OCCCN4CCOCC4", "an oral kinase inhibitor"},
    {"imatinib", "CC1=C(C=C(C=C1)NC(=O)C2=CC=C(C=C2)CN3CCN(CC3)C)NC4=NC=CC(=N4)C5=CN=CC=C5", "a kinase inhibitor used in leukemia"},
    {"cisplatin", "N.N.Cl[Pt]Cl", "a platinum-based chemotherapy agent"},
    {"tamoxifen", "CCC(=C(C1=CC=CC=C1)C2=CC=C(C=C2)OCCN(C)C)C3=CC=CC=C3", "a selective estrogen receptor modulator"},
    {"atorvastatin", "CC(C)C1=C(C(=C(N1CC[C@H](C[C@H](CC(=O)O)O)O)C2=CC=C(C=C2)F)C3=CC=CC=C3)C(=O)NC4=CC=CC=C4", "a statin that lowers cholesterol"},
    {"warfarin", "CC(=O)CC(C1=CC=CC=C1)C2=C(C3=CC=CC=C3OC2=O)O", "a vitamin K antagonist anticoagulant"},
    {"lisinopril", "C1CC(N(C1)C(=O)C(CCCCN)NC(CCC2=CC=CC=C2)C(=O)O)C(=O)O", "an angiotensin converting enzyme inhibitor"},
    {"omeprazole", "CC1=CN=C(C(=C1OC)C)CS(=O)C2=NC3=C(N2)C=C(C=C3)OC", "a proton pump inhibitor"},
    {"sertraline", "CN[C@H]1CC[C@@H](C2=CC=CC=C21)C3=CC(=C(C=C3)Cl)Cl", "a selective serotonin reuptake inhibitor"},
    {"fluoxetine", "CNCCC(C1=CC=CC=C1)OC2=CC=C(C=C2)C(F)(F)F", "an antidepressant of the serotonin reuptake inhibitor class"},
    {"lenalidomide", "C1CC(=O)NC(=O)C1N2CC3=C(C2=O)C=CC=C3N", "an immunomodulatory analogue of thalidomide"},
    {"methotrexate", "CN(CC1=CN=C2C(=N1)C(=NC(=N2)N)N)C3=CC=C(C=C3)C(=O)NC(CCC(=O)O)C(=O)O", "an antimetabolite and antifolate"},
    {"rivastigmine", "CCN(C)C(=O)OC1=CC=CC(=C1)C(C)N(C)C", "a cholinesterase inhibitor"},
    {"donepezil", "COC1=C(C=C2C(=C1)CC(C2=O)CC3CCN(CC3)CC4=CC=CC=C4)OC", "an acetylcholinesterase inhibitor"},
    {"naproxen", "C[C@@H](C1=CC2=C(C=C1)C=C(C=C2)OC)C(=O)O", "a propionic acid anti-inflammatory drug"},
    {"celecoxib", "CC1=CC=C(C=C1)C2=CC(=NN2C3=CC=C(C=C3)S(=O)(=O)N)C(F)(F)F", "a selective cyclooxygenase 2 inhibitor"},
    {"sitagliptin", "C1CN2C(=NN=C2C(F)(F)F)CN1C(=O)C[C@@H](CC3=CC(=C(C=C3F)F)F)N", "a dipeptidyl peptidase 4 inhibitor"},
}};

constexpr std::array<std::string_view, 20> kDiseases = {
    "multiple myeloma",      "non-small cell lung cancer", "melanoma",
    "colorectal cancer",     "type 2 diabetes mellitus",   "hypertension",
    "alzheimer disease",     "knee osteoarthritis",        "rheumatoid arthritis",
    "breast cancer",         "chronic myeloid leukemia",   "major depressive disorder",
    "asthma",                "psoriasis",                  "hypercholesterolemia",
    "atrial fibrillation",   "gastric ulcer",              "parkinson disease",
    "ovarian cancer",        "chronic kidney disease",
};

constexpr std::array<std::string_view, 10> kInclusion = {
    "Age >= 18 years at the time of consent.",
    "ECOG performance status of 0 to 1.",
    "Adequate bone marrow and liver function.",
    "Signed written informed consent.",
    "Negative pregnancy test for women of childbearing potential.",
    "Measurable disease per standard criteria.",
    "Stable medication dose for at least 4 weeks.",
    "Body mass index between 18 and 35.",
    "Life expectancy of at least 12 weeks.",
    "Able to attend all study visits.",
};

constexpr std::array<std::string_view, 8> kExclusion = {
    "Prior history of other malignancies.",
    "Pregnant or breastfeeding women.",
    "Known hypersensitivity to the study drug.",
    "Uncontrolled infection requiring treatment.",
    "Participation in another trial within 30 days.",
    "Severe hepatic impairment.",
    "History of cardiac arrhythmia.",
    "Active substance abuse.",
};

template <class Container>
std::vector<std::size_t> pick(const Container& pool, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::array<std::string_view, kDrugs.size()> smiles_pool() {
  std::array<std::string_view, kDrugs.size()> out{};
  for (std::size_t i = 0; i < kDrugs.size(); ++i) out[i] = kDrugs[i].smiles;
  return out;
}

const auto kSmilesPool = smiles_pool();

}  // namespace

std::span<const std::string_view> synthetic_smiles_pool() { return kSmilesPool; }

std::vector<TrialRecord> generate_synthetic(std::size_t n, std::uint64_t seed,
                                            const SignalSpec& signal) {
  if (n == 0) throw ContractError("generate_synthetic: n must be at least 1");
  if (signal.fidelity < 0.0 || signal.fidelity > 1.0 || signal.success_rate < 0.0 ||
      signal.success_rate > 1.0) {
    throw ContractError("generate_synthetic: probabilities must lie in [0, 1]");
  }
  Rng rng = make_rng(seed, Stream::kData);
  std::uniform_int_distribution<int> phase_dist(1, 3);
  std::uniform_int_distribution<std::size_t> small(1, 3);
  std::bernoulli_distribution success(signal.success_rate);
  std::bernoulli_distribution agree(signal.fidelity);

  auto has_signal = [&](Modality m) {
    return std::find(signal.modalities.begin(), signal.modalities.end(), m) !=
           signal.modalities.end();
  };

  std::vector<TrialRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "SYN%05zu", i);
    const int label = success(rng) ? 1 : 0;
    const bool points_to_success = agree(rng) ? label == 1 : label == 0;
    const std::string& token = points_to_success ? signal.success_token : signal.failure_token;
    const std::string& atom = points_to_success ? signal.success_atom : signal.failure_atom;

    TrialRecord r = empty_record(id, static_cast<Phase>(phase_dist(rng)), label);

    std::vector<std::string> diseases;
    for (auto d : pick(kDiseases, small(rng), rng)) diseases.emplace_back(kDiseases[d]);
    const auto drug_idx = pick(kDrugs, small(rng), rng);
    std::vector<std::string> drugs, smiles;
    std::string description;
    for (auto d : drug_idx) {
      drugs.emplace_back(kDrugs[d].name);
      smiles.emplace_back(kDrugs[d].smiles);
      if (!description.empty()) description += ' ';
      description += std::string(kDrugs[d].name) + " is " + std::string(kDrugs[d].description) + '.';
    }
    std::string criteria = "Inclusion Criteria:";
    for (auto c : pick(kInclusion, 2 + small(rng), rng)) criteria += " - " + std::string(kInclusion[c]);
    criteria += " Exclusion Criteria:";
    for (auto c : pick(kExclusion, 1 + small(rng), rng)) criteria += " - " + std::string(kExclusion[c]);

    if (has_signal(Modality::kDiseases)) {
      const std::size_t at = std::uniform_int_distribution<std::size_t>(0, diseases.size() - 1)(rng);
      diseases[at] = token + " " + diseases[at];
    }
    if (has_signal(Modality::kDrugs)) drugs.push_back(token + " regimen");
    if (has_signal(Modality::kDescription)) description += " The regimen targets " + token + " cases.";
    if (has_signal(Modality::kSmiles)) smiles.push_back(atom);
    if (has_signal(Modality::kCriteria)) criteria += " - Patients with " + token + " presentation.";

    r.modalities[Modality::kDiseases] = std::move(diseases);
    r.modalities[Modality::kDrugs] = std::move(drugs);
    r.modalities[Modality::kDescription] = std::move(description);
    r.modalities[Modality::kSmiles] = std::move(smiles);
    r.modalities[Modality::kCriteria] = std::move(criteria);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lifted
